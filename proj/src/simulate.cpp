#include "fairalloc/simulate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <exception>
#include <mutex>

#include "fairalloc/core.hpp"
#include "fairalloc/rng.hpp"

namespace fairalloc {

namespace {

constexpr std::uint64_t kMvnStream = 0x6d766e;
constexpr std::uint64_t kMvtStream = 0x6d7674;
constexpr std::uint64_t kVerifyStream = 0x766679;
constexpr std::size_t kRowChunk = 4096;
constexpr std::size_t kVerifyChunk = 256;

void check_cov_shape(const std::vector<double>& mu, const std::vector<double>& sigma) {
    const std::size_t d = mu.size();
    if (d == 0) throw InvalidArgument("model: dimension must be at least 1");
    if (sigma.size() != d * d)
        throw ShapeMismatch("model: sigma must be " + std::to_string(d) + "x" +
                            std::to_string(d));
    double scale = 0.0;
    for (double v : sigma) {
        if (!std::isfinite(v)) throw InvalidArgument("model: non-finite sigma entry");
        scale = std::max(scale, std::fabs(v));
    }
    for (double v : mu)
        if (!std::isfinite(v)) throw InvalidArgument("model: non-finite mu entry");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (std::fabs(sigma[i * d + j] - sigma[j * d + i]) > 1e-12 * std::max(scale, 1.0))
                throw InvalidArgument("model: sigma is not symmetric at (" +
                                      std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                      ")");
}

// Symmetric PSD square root U sqrt(max(lambda, 0)) U^T. Eigenvalues below
// -1e-10 * max|lambda| mean the input is not a covariance matrix.
std::vector<double> psd_sqrt(const std::vector<double>& sigma, std::size_t d) {
    Eigen::MatrixXd s(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                sigma[i * d + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success)
        throw FactorizationFailure("covariance eigendecomposition failed");
    const Eigen::VectorXd lambda = es.eigenvalues();
    const double top = lambda.cwiseAbs().maxCoeff();
    if (lambda.minCoeff() < -1e-10 * std::max(top, 1e-300))
        throw FactorizationFailure("covariance is not positive semidefinite (min eigenvalue " +
                                   std::to_string(lambda.minCoeff()) + ")");
    const Eigen::MatrixXd root = es.eigenvectors() *
                                 lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                 es.eigenvectors().transpose();
    std::vector<double> out(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out[i * d + j] = root(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

// Runs chunked generation, capturing the first exception thrown by any
// worker so it can propagate to the caller.
template <typename Fn>
void chunked(std::size_t count, std::size_t chunk_size, unsigned threads, Fn&& fn) {
    std::exception_ptr first_error;
    std::mutex guard;
    parallel_chunks(count, chunk_size, threads,
                    [&](std::size_t chunk, std::size_t start, std::size_t len) {
                        try {
                            fn(chunk, start, len);
                        } catch (...) {
                            const std::lock_guard<std::mutex> lock(guard);
                            if (!first_error) first_error = std::current_exception();
                        }
                    });
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

void GaussianModel::validate() const {
    check_cov_shape(mu, sigma);
    psd_sqrt(sigma, dim());  // throws FactorizationFailure when not PSD
}

void StudentTModel::validate() const {
    if (!(nu > 2.0))
        throw InvalidArgument("student-t model: nu must exceed 2 for a finite covariance");
    check_cov_shape(mu, sigma);
    psd_sqrt(sigma, dim());
}

PnlSample mvn_sample(const GaussianModel& model, std::size_t rows, std::uint64_t seed,
                     unsigned threads) {
    model.validate();
    if (rows == 0) throw InvalidArgument("mvn_sample: rows must be at least 1");
    const std::size_t d = model.dim();
    const std::vector<double> a = psd_sqrt(model.sigma, d);

    PnlSample out;
    out.rows = rows;
    out.cols = d;
    out.values.resize(rows * d);
    const Rng root(seed, kMvnStream);
    chunked(rows, kRowChunk, threads, [&](std::size_t chunk, std::size_t first,
                                          std::size_t len) {
        Rng rng = root.substream(chunk);
        std::vector<double> z(d);
        for (std::size_t r = first; r < first + len; ++r) {
            for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
            double* row = out.values.data() + r * d;
            for (std::size_t i = 0; i < d; ++i) {
                double acc = model.mu[i];
                for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * z[j];
                row[i] = acc;
            }
        }
    });
    return out;
}

PnlSample mvt_sample(const StudentTModel& model, std::size_t rows, std::uint64_t seed,
                     unsigned threads) {
    model.validate();
    if (rows == 0) throw InvalidArgument("mvt_sample: rows must be at least 1");
    const std::size_t d = model.dim();
    // Scale matrix (nu - 2)/nu * sigma gives Cov = sigma exactly.
    std::vector<double> scaled(model.sigma);
    const double shrink = (model.nu - 2.0) / model.nu;
    for (double& v : scaled) v *= shrink;
    const std::vector<double> a = psd_sqrt(scaled, d);

    PnlSample out;
    out.rows = rows;
    out.cols = d;
    out.values.resize(rows * d);
    const Rng root(seed, kMvtStream);
    chunked(rows, kRowChunk, threads, [&](std::size_t chunk, std::size_t first,
                                          std::size_t len) {
        Rng rng = root.substream(chunk);
        std::vector<double> z(d);
        for (std::size_t r = first; r < first + len; ++r) {
            for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
            const double q = rng.chi_squared(model.nu);
            const double inv = 1.0 / std::sqrt(q / model.nu);
            double* row = out.values.data() + r * d;
            for (std::size_t i = 0; i < d; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * z[j];
                row[i] = model.mu[i] + acc * inv;
            }
        }
    });
    return out;
}

VerifyResult verify_fairness(EstimatorId id, const GaussianModel& model, std::size_t n,
                             RiskLevel alpha, std::size_t replications, std::uint64_t seed,
                             const EstimatorContext& ctx, unsigned threads) {
    model.validate();
    if (n < 1) throw InvalidArgument("verify_fairness: n must be at least 1");
    if (replications < 1000)
        throw InvalidArgument("verify_fairness: need at least 1000 replications");
    const std::size_t d = model.dim();
    const std::vector<double> a = psd_sqrt(model.sigma, d);

    std::vector<double> y(replications * d);  // secured margins per replication
    std::vector<double> v(replications);      // aggregate secured values
    const Rng root(seed, kVerifyStream);
    chunked(replications, kVerifyChunk, threads, [&](std::size_t chunk, std::size_t first,
                                                     std::size_t len) {
        Rng rng = root.substream(chunk);
        std::vector<double> panel(n * d);
        std::vector<double> z(d);
        for (std::size_t r = first; r < first + len; ++r) {
            for (std::size_t row = 0; row < n; ++row) {
                for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
                for (std::size_t i = 0; i < d; ++i) {
                    double acc = model.mu[i];
                    for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * z[j];
                    panel[row * d + i] = acc;
                }
            }
            const AllocationVector alloc =
                compute_allocation(id, PanelView(panel.data(), n, d), alpha, ctx);
            for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
            double agg = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double acc = model.mu[i];
                for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * z[j];
                const double margin = acc + alloc.a[i];
                y[r * d + i] = margin;
                agg += margin;
            }
            v[r] = agg;
        }
    });

    // Tail means over a block of replications, threshold from the block's
    // own empirical quantile.
    auto block_residuals = [&](std::size_t first, std::size_t count) {
        const std::span<const double> slice(v.data() + first, count);
        const double thr = order_statistic(slice, var_rank(count, alpha));
        std::vector<double> sums(d, 0.0);
        std::size_t hits = 0;
        for (std::size_t r = first; r < first + count; ++r) {
            if (v[r] <= thr) {
                for (std::size_t i = 0; i < d; ++i) sums[i] += y[r * d + i];
                ++hits;
            }
        }
        for (double& s : sums) s /= static_cast<double>(hits);
        return sums;
    };

    VerifyResult res;
    res.residual = block_residuals(0, replications);
    for (double r : res.residual) res.aggregate_residual += r;

    const std::size_t n_batches = 100;
    const std::size_t batch = replications / n_batches;
    std::vector<double> mean(d, 0.0);
    std::vector<double> m2(d, 0.0);
    double agg_mean = 0.0;
    double agg_m2 = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        const std::vector<double> rb = block_residuals(b * batch, batch);
        double agg = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            agg += rb[i];
            const double delta = rb[i] - mean[i];
            mean[i] += delta / static_cast<double>(b + 1);
            m2[i] += delta * (rb[i] - mean[i]);
        }
        const double adelta = agg - agg_mean;
        agg_mean += adelta / static_cast<double>(b + 1);
        agg_m2 += adelta * (agg - agg_mean);
    }
    res.se.resize(d);
    for (std::size_t i = 0; i < d; ++i)
        res.se[i] = std::sqrt(m2[i] / static_cast<double>(n_batches - 1)) /
                    std::sqrt(static_cast<double>(n_batches));
    res.aggregate_se = std::sqrt(agg_m2 / static_cast<double>(n_batches - 1)) /
                       std::sqrt(static_cast<double>(n_batches));
    return res;
}

}  // namespace fairalloc
