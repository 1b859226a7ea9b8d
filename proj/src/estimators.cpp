#include "fairalloc/estimators.hpp"

#include <cmath>

#include "fairalloc/normal.hpp"

namespace fairalloc {

namespace {

AllocationVector make_alloc(std::vector<double> a, EstimatorId id, double alpha,
                            std::size_t window) {
    AllocationVector out;
    out.a = std::move(a);
    out.estimator_id = id;
    out.alpha = alpha;
    out.window = window;
    return out;
}

}  // namespace

RegressionCoefficients regression_coeffs(const PortfolioStats& stats) {
    if (!(stats.var_s > 0.0))
        throw DegenerateVariance("regression_coeffs: aggregate variance is zero");
    const std::size_t d = stats.mu.size();
    RegressionCoefficients rc;
    rc.beta.resize(d);
    rc.alpha_reg.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        rc.beta[i] = stats.cov[i] / stats.var_s;
        rc.alpha_reg[i] = stats.mu[i] - rc.beta[i] * stats.mu_s;
    }
    return rc;
}

double gaussian_true_es(const GaussianModel& model, RiskLevel alpha) {
    const std::size_t d = model.dim();
    double mu_s = 0.0;
    double var_s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        mu_s += model.mu[i];
        for (std::size_t j = 0; j < d; ++j) var_s += model.sigma_at(i, j);
    }
    if (var_s < 0.0)
        throw InvalidArgument("gaussian_true_es: negative aggregate variance");
    return -mu_s + std::sqrt(var_s) * es_factor(alpha.value());
}

AllocationVector gaussian_true_allocation(const GaussianModel& model, RiskLevel alpha) {
    const std::size_t d = model.dim();
    std::vector<double> cov(d, 0.0);
    double var_s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) cov[i] += model.sigma_at(i, j);
        var_s += cov[i];
    }
    if (!(var_s > 0.0))
        throw DegenerateVariance("gaussian_true_allocation: aggregate variance is zero");
    const double scale = es_factor(alpha.value()) / std::sqrt(var_s);
    std::vector<double> a(d);
    for (std::size_t i = 0; i < d; ++i) a[i] = -model.mu[i] + cov[i] * scale;
    return make_alloc(std::move(a), EstimatorId::GaussianTrue, alpha.value(), 0);
}

double plugin_gaussian_es(const PortfolioStats& stats, RiskLevel alpha) {
    return -stats.mu_s + std::sqrt(stats.var_s) * es_factor(alpha.value());
}

double unbiased_gaussian_es(const PortfolioStats& stats, RiskLevel, double bn) {
    return -stats.mu_s + std::sqrt(stats.var_s) * bn;
}

AllocationVector mean_allocation(const PanelView& panel) {
    const PortfolioStats st = portfolio_stats(panel);
    std::vector<double> a(st.mu.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = -st.mu[i];
    return make_alloc(std::move(a), EstimatorId::Mean, 0.0, panel.rows);
}

AllocationVector estimator_B(const PanelView& panel, RiskLevel alpha, double bn) {
    const PortfolioStats st = portfolio_stats(panel);
    const RegressionCoefficients rc = regression_coeffs(st);
    const double r_hat = unbiased_gaussian_es(st, alpha, bn);
    std::vector<double> a(rc.beta.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = -rc.alpha_reg[i] + rc.beta[i] * r_hat;
    return make_alloc(std::move(a), EstimatorId::GaussianFair, alpha.value(), panel.rows);
}

AllocationVector estimator_C(const PanelView& panel, RiskLevel alpha) {
    const PortfolioStats st = portfolio_stats(panel);
    if (!(st.var_s > 0.0))
        throw DegenerateVariance("estimator_C: aggregate variance is zero");
    const double scale = es_factor(alpha.value()) / std::sqrt(st.var_s);
    std::vector<double> a(st.mu.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = -st.mu[i] + st.cov[i] * scale;
    return make_alloc(std::move(a), EstimatorId::GaussianPlugin, alpha.value(), panel.rows);
}

namespace {

// Shared tail accumulation for the nonparametric estimators. Column sums
// are gathered in one pass over the original row order.
struct ColumnTail {
    std::vector<double> sums;
    std::size_t count = 0;
};

ColumnTail column_tail(const PanelView& panel, RiskLevel alpha) {
    const std::vector<double> s = aggregate(panel);
    const double threshold = order_statistic(s, var_rank(s.size(), alpha));
    ColumnTail t;
    t.sums.assign(panel.cols, 0.0);
    for (std::size_t r = 0; r < panel.rows; ++r) {
        if (s[r] <= threshold) {
            const double* row = panel.row(r);
            for (std::size_t c = 0; c < panel.cols; ++c) t.sums[c] += row[c];
            ++t.count;
        }
    }
    return t;
}

}  // namespace

AllocationVector estimator_D_hat(const PanelView& panel, RiskLevel alpha) {
    ColumnTail t = column_tail(panel, alpha);
    const double inv = 1.0 / static_cast<double>(t.count);
    for (double& v : t.sums) v *= -inv;
    return make_alloc(std::move(t.sums), EstimatorId::NpHat, alpha.value(), panel.rows);
}

AllocationVector estimator_D_check(const PanelView& panel, RiskLevel alpha) {
    ColumnTail t = column_tail(panel, alpha);
    const double inv = 1.0 / (static_cast<double>(panel.rows) * alpha.value());
    for (double& v : t.sums) v *= -inv;
    return make_alloc(std::move(t.sums), EstimatorId::NpCheck, alpha.value(), panel.rows);
}

AllocationVector compute_allocation(EstimatorId id, const PanelView& panel, RiskLevel alpha,
                                    const EstimatorContext& ctx) {
    switch (id) {
        case EstimatorId::Mean:
            return mean_allocation(panel);
        case EstimatorId::GaussianFair:
            if (!ctx.has_bn)
                throw InvalidArgument("gaussian-fair requires the b_n constant");
            return estimator_B(panel, alpha, ctx.bn);
        case EstimatorId::GaussianPlugin:
            return estimator_C(panel, alpha);
        case EstimatorId::NpHat:
            return estimator_D_hat(panel, alpha);
        case EstimatorId::NpCheck:
            return estimator_D_check(panel, alpha);
        case EstimatorId::GaussianTrue:
            if (ctx.model == nullptr)
                throw InvalidArgument("gaussian-true requires model parameters");
            if (ctx.model->dim() != panel.cols)
                throw ShapeMismatch("gaussian-true: model dimension does not match panel");
            return gaussian_true_allocation(*ctx.model, alpha);
        case EstimatorId::External:
            throw InvalidArgument("external allocations are supplied, not computed");
    }
    throw InvalidArgument("compute_allocation: unknown estimator id");
}

}  // namespace fairalloc
