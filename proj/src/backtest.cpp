#include "fairalloc/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fairalloc/core.hpp"

namespace fairalloc {

namespace {

constexpr double kChi2TwoDof99 = 9.21;

std::string day_error(std::size_t k, const char* what) {
    return "backtest day " + std::to_string(k + 1) + ": " + what;
}

// Tail statistics of a series at one order-statistic rank, accumulated
// over the original row order so they agree bit-for-bit with the
// standalone g_total / g_margin computations.
struct RankStats {
    std::size_t count = 0;
    double sum_xi = 0.0;
    std::vector<double> sum_y;

    double g_total() const { return -sum_xi / static_cast<double>(count); }
    double g_margin(std::size_t i) const { return -sum_y[i] / static_cast<double>(count); }
};

class RankCache {
  public:
    explicit RankCache(const BacktestSeries& s) : s_(s), sorted_(s.xi) {
        std::sort(sorted_.begin(), sorted_.end());
    }

    const RankStats& at(std::size_t j) {
        const auto it = cache_.find(j);
        if (it != cache_.end()) return it->second;
        RankStats st;
        st.sum_y.assign(s_.d, 0.0);
        const double thr = sorted_[j - 1];
        for (std::size_t k = 0; k < s_.m; ++k) {
            if (s_.xi[k] <= thr) {
                ++st.count;
                st.sum_xi += s_.xi[k];
                const double* row = s_.y.data() + k * s_.d;
                for (std::size_t c = 0; c < s_.d; ++c) st.sum_y[c] += row[c];
            }
        }
        return cache_.emplace(j, std::move(st)).first->second;
    }

  private:
    const BacktestSeries& s_;
    std::vector<double> sorted_;
    std::map<std::size_t, RankStats> cache_;
};

// Prefix sums in ascending-xi order. G_beta and G^i_beta are step
// functions of the rank j = min(floor(m beta) + 1, m); these tables give
// their values at every rank in O(1), which the exact-infimum statistics
// sweep over.
struct SortedPrefix {
    std::size_t m = 0;
    std::size_t d = 0;
    std::vector<double> xs;                // sorted xi
    std::vector<std::size_t> tail_count;   // tie-inclusive tail size per rank
    std::vector<double> xi_prefix;         // length m + 1
    std::vector<double> y_prefix;          // (m + 1) x d, row-major

    explicit SortedPrefix(const BacktestSeries& s) : m(s.m), d(s.d) {
        std::vector<std::size_t> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return s.xi[a] < s.xi[b]; });
        xs.resize(m);
        xi_prefix.assign(m + 1, 0.0);
        y_prefix.assign((m + 1) * d, 0.0);
        for (std::size_t t = 0; t < m; ++t) {
            xs[t] = s.xi[idx[t]];
            xi_prefix[t + 1] = xi_prefix[t] + xs[t];
            const double* row = s.y.data() + idx[t] * d;
            for (std::size_t c = 0; c < d; ++c)
                y_prefix[(t + 1) * d + c] = y_prefix[t * d + c] + row[c];
        }
        tail_count.resize(m);
        for (std::size_t j = 1; j <= m; ++j)
            tail_count[j - 1] = static_cast<std::size_t>(
                std::upper_bound(xs.begin(), xs.end(), xs[j - 1]) - xs.begin());
    }

    double t_stat(std::size_t j) const {
        const std::size_t c = tail_count[j - 1];
        return -xi_prefix[c] / static_cast<double>(c);
    }

    double u_stat(std::size_t j, std::size_t i) const {
        const std::size_t c = tail_count[j - 1];
        return -y_prefix[c * d + i] / static_cast<double>(c);
    }
};

std::vector<double> make_grid(double step) {
    if (!(step > 0.0) || !(step <= 1.0))
        throw InvalidArgument("grid step must lie in (0, 1]");
    std::vector<double> grid;
    for (std::size_t k = 1;; ++k) {
        const double beta = step * static_cast<double>(k);
        if (beta >= 1.0 - 1e-12) break;
        grid.push_back(beta);
    }
    grid.push_back(1.0);
    return grid;
}

WShift w_shift_from_cache(RankCache& cache, std::size_t m, std::size_t i, double alpha,
                          double step) {
    const double g_ref = cache.at(var_rank(m, RiskLevel(alpha))).g_margin(i);
    WShift ws;

    ws.w_minus = alpha;
    for (std::size_t k = 0;; ++k) {
        const double eps = step * static_cast<double>(k);
        const double beta = alpha - eps;
        if (!(beta > 1e-12)) break;  // the shifted level must stay positive
        const double g = cache.at(var_rank(m, RiskLevel(beta))).g_margin(i);
        if (g_ref * g <= 0.0) {
            ws.w_minus = eps;
            break;
        }
    }

    ws.w_plus = 1.0 - alpha;
    for (std::size_t k = 0;; ++k) {
        double eps = step * static_cast<double>(k);
        bool last = false;
        if (eps >= 1.0 - alpha - 1e-12) {
            eps = 1.0 - alpha;  // endpoint beta = 1
            last = true;
        }
        const double g = cache.at(var_rank(m, RiskLevel(alpha + eps))).g_margin(i);
        if (g_ref * g <= 0.0) {
            ws.w_plus = eps;
            break;
        }
        if (last) break;
    }

    ws.w = (ws.w_minus < ws.w_plus) ? -ws.w_minus : ws.w_plus;
    return ws;
}

WShift w_shift_from_prefix(const SortedPrefix& sp, std::size_t i, double alpha) {
    const std::size_t m = sp.m;
    const std::size_t j_alpha = var_rank(m, RiskLevel(alpha));
    const double u_ref = sp.u_stat(j_alpha, i);
    WShift ws;
    if (u_ref == 0.0) return ws;  // zero shift in both directions

    ws.w_minus = alpha;
    for (std::size_t j = j_alpha; j-- > 1;) {
        if (u_ref * sp.u_stat(j, i) <= 0.0) {
            ws.w_minus = alpha - static_cast<double>(j) / static_cast<double>(m);
            break;
        }
    }

    ws.w_plus = 1.0 - alpha;
    for (std::size_t j = j_alpha + 1; j <= m; ++j) {
        if (u_ref * sp.u_stat(j, i) <= 0.0) {
            ws.w_plus = static_cast<double>(j - 1) / static_cast<double>(m) - alpha;
            break;
        }
    }

    ws.w = (ws.w_minus < ws.w_plus) ? -ws.w_minus : ws.w_plus;
    return ws;
}

}  // namespace

void BacktestSeries::validate() const {
    if (m == 0 || d == 0) throw InvalidArgument("BacktestSeries: empty series");
    if (y.size() != m * d)
        throw ShapeMismatch("BacktestSeries: y size does not match m x d");
    if (xi.size() != m)
        throw ShapeMismatch("BacktestSeries: xi length does not match m");
    for (std::size_t k = 0; k < m; ++k) {
        double sum = 0.0;
        double scale = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            sum += y[k * d + i];
            scale += std::fabs(y[k * d + i]);
        }
        if (std::fabs(sum - xi[k]) > 1e-12 * scale)
            throw ShapeMismatch("BacktestSeries: xi does not aggregate y at row " +
                                std::to_string(k + 1));
    }
}

std::vector<AllocationVector> rolling_allocations(const PnlSample& data, EstimatorId id,
                                                  RiskLevel alpha, std::size_t n,
                                                  const EstimatorContext& ctx) {
    data.validate();
    if (n < 1) throw InvalidArgument("rolling_allocations: window must be at least 1");
    if (data.rows < n + 1)
        throw InvalidArgument("rolling_allocations: need at least " + std::to_string(n + 1) +
                              " rows, have " + std::to_string(data.rows));
    const std::size_t m = data.rows - n;
    const PanelView panel(data);
    std::vector<AllocationVector> out;
    out.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        try {
            out.push_back(compute_allocation(id, panel.slice(k, n), alpha, ctx));
        } catch (const DegenerateVariance& e) {
            throw DegenerateVariance(day_error(k, e.what()));
        } catch (const Error& e) {
            throw Error(day_error(k, e.what()));
        }
    }
    return out;
}

BacktestSeries secured_positions(const PanelView& realized,
                                 const std::vector<AllocationVector>& allocs) {
    if (realized.rows == 0 || realized.cols == 0)
        throw InvalidArgument("secured_positions: empty realized panel");
    if (allocs.size() != realized.rows)
        throw ShapeMismatch("secured_positions: " + std::to_string(allocs.size()) +
                            " allocations for " + std::to_string(realized.rows) + " rows");
    BacktestSeries s;
    s.m = realized.rows;
    s.d = realized.cols;
    s.y.resize(s.m * s.d);
    s.xi.resize(s.m);
    for (std::size_t k = 0; k < s.m; ++k) {
        if (allocs[k].a.size() != s.d)
            throw ShapeMismatch("secured_positions: allocation " + std::to_string(k + 1) +
                                " has wrong dimension");
        double acc = 0.0;
        for (std::size_t i = 0; i < s.d; ++i) {
            const double v = realized.at(k, i) + allocs[k].a[i];
            s.y[k * s.d + i] = v;
            acc += v;
        }
        s.xi[k] = acc;
    }
    s.estimator_id = allocs.front().estimator_id;
    s.alpha = allocs.front().alpha;
    s.window = allocs.front().window;
    return s;
}

BacktestSeries run_backtest(const PnlSample& data, EstimatorId id, RiskLevel alpha,
                            std::size_t n, const EstimatorContext& ctx) {
    const std::vector<AllocationVector> allocs = rolling_allocations(data, id, alpha, n, ctx);
    BacktestSeries s = secured_positions(PanelView(data).slice(n, data.rows - n), allocs);
    s.estimator_id = id;
    s.alpha = alpha.value();
    s.window = n;
    return s;
}

double g_total(const BacktestSeries& series, RiskLevel beta) {
    return empirical_es(series.xi, beta);
}

double g_margin(const BacktestSeries& series, std::size_t i, RiskLevel beta) {
    if (i >= series.d)
        throw IndexOutOfRange("g_margin: constituent " + std::to_string(i) +
                              " out of range for d = " + std::to_string(series.d));
    std::vector<double> col(series.m);
    for (std::size_t k = 0; k < series.m; ++k) col[k] = series.y_at(k, i);
    const TailSum t = tail_sum(col, series.xi, beta);
    return -t.sum / static_cast<double>(t.count);
}

Upsilon upsilon(const BacktestSeries& series, double grid_step) {
    series.validate();
    RankCache cache(series);
    for (double beta : make_grid(grid_step)) {
        if (cache.at(var_rank(series.m, RiskLevel(beta))).g_total() <= 0.0)
            return {beta, true};
    }
    return {1.0, false};
}

Upsilon upsilon_exact(const BacktestSeries& series) {
    series.validate();
    const SortedPrefix sp(series);
    for (std::size_t j = 1; j <= series.m; ++j) {
        if (sp.t_stat(j) <= 0.0)
            return {static_cast<double>(j - 1) / static_cast<double>(series.m), true};
    }
    return {1.0, false};
}

WShift w_shifts(const BacktestSeries& series, std::size_t i, RiskLevel alpha,
                double grid_step) {
    series.validate();
    if (i >= series.d)
        throw IndexOutOfRange("w_shifts: constituent index out of range");
    if (!(grid_step > 0.0)) throw InvalidArgument("w_shifts: grid step must be positive");
    RankCache cache(series);
    return w_shift_from_cache(cache, series.m, i, alpha.value(), grid_step);
}

WShift w_shifts_exact(const BacktestSeries& series, std::size_t i, RiskLevel alpha) {
    series.validate();
    if (i >= series.d)
        throw IndexOutOfRange("w_shifts_exact: constituent index out of range");
    const SortedPrefix sp(series);
    return w_shift_from_prefix(sp, i, alpha.value());
}

FairnessReport fairness_report(const BacktestSeries& series, RiskLevel alpha,
                               double grid_step) {
    series.validate();
    const std::size_t m = series.m;
    const std::size_t d = series.d;

    FairnessReport rep;
    rep.alpha = alpha.value();
    rep.grid_step = grid_step;
    rep.grid = make_grid(grid_step);

    RankCache cache(series);
    rep.g_curve.resize(rep.grid.size());
    rep.g_margin_curves.assign(d, std::vector<double>(rep.grid.size()));
    for (std::size_t t = 0; t < rep.grid.size(); ++t) {
        const RankStats& st = cache.at(var_rank(m, RiskLevel(rep.grid[t])));
        rep.g_curve[t] = st.g_total();
        for (std::size_t i = 0; i < d; ++i) rep.g_margin_curves[i][t] = st.g_margin(i);
    }

    const RankStats& at_alpha = cache.at(var_rank(m, alpha));
    rep.g_total_at_alpha = at_alpha.g_total();
    rep.g_margin_at_alpha.resize(d);
    for (std::size_t i = 0; i < d; ++i) rep.g_margin_at_alpha[i] = at_alpha.g_margin(i);

    rep.upsilon = {1.0, false};
    for (std::size_t t = 0; t < rep.grid.size(); ++t) {
        if (rep.g_curve[t] <= 0.0) {
            rep.upsilon = {rep.grid[t], true};
            break;
        }
    }

    rep.w_minus.resize(d);
    rep.w_plus.resize(d);
    rep.w.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const WShift ws = w_shift_from_cache(cache, m, i, alpha.value(), grid_step);
        rep.w_minus[i] = ws.w_minus;
        rep.w_plus[i] = ws.w_plus;
        rep.w[i] = ws.w;
    }

    const SortedPrefix sp(series);
    rep.upsilon_exact = {1.0, false};
    for (std::size_t j = 1; j <= m; ++j) {
        if (sp.t_stat(j) <= 0.0) {
            rep.upsilon_exact = {static_cast<double>(j - 1) / static_cast<double>(m), true};
            break;
        }
    }
    rep.w_minus_exact.resize(d);
    rep.w_plus_exact.resize(d);
    rep.w_exact.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const WShift ws = w_shift_from_prefix(sp, i, alpha.value());
        rep.w_minus_exact[i] = ws.w_minus;
        rep.w_plus_exact[i] = ws.w_plus;
        rep.w_exact[i] = ws.w;
    }

    if (!rep.upsilon.attained) rep.flags.push_back("upsilon-not-attained");
    return rep;
}

JarqueBera jarque_bera(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 8) throw InvalidArgument("jarque_bera: need at least 8 observations");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double v : values) {
        const double r = v - mean;
        const double r2 = r * r;
        m2 += r2;
        m3 += r2 * r;
        m4 += r2 * r2;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    m2 *= inv_n;
    m3 *= inv_n;
    m4 *= inv_n;
    if (!(m2 > 0.0)) throw DegenerateVariance("jarque_bera: zero variance");
    const double skew = m3 / std::pow(m2, 1.5);
    const double exkurt = m4 / (m2 * m2) - 3.0;
    JarqueBera jb;
    jb.statistic = static_cast<double>(n) / 6.0 * (skew * skew + 0.25 * exkurt * exkurt);
    jb.exceeds_1pct = jb.statistic > kChi2TwoDof99;
    return jb;
}

}  // namespace fairalloc
