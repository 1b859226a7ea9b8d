#include "fairalloc/core.hpp"

#include <algorithm>
#include <cmath>

namespace fairalloc {

void PnlSample::validate() const {
    if (rows == 0 || cols == 0)
        throw InvalidArgument("PnlSample: rows and cols must be at least 1");
    if (values.size() != rows * cols)
        throw ShapeMismatch("PnlSample: values size " + std::to_string(values.size()) +
                            " does not match " + std::to_string(rows) + "x" +
                            std::to_string(cols));
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("PnlSample: non-finite entry");
    if (!dates.empty()) {
        if (dates.size() != rows)
            throw ShapeMismatch("PnlSample: dates length does not match rows");
        for (std::size_t r = 1; r < rows; ++r)
            if (!(dates[r - 1] < dates[r]))
                throw NonMonotoneDates("PnlSample: dates must be strictly increasing at row " +
                                       std::to_string(r + 1));
    }
}

double AllocationVector::total() const {
    double t = 0.0;
    for (double v : a) t += v;
    return t;
}

std::string to_string(EstimatorId id) {
    switch (id) {
        case EstimatorId::Mean: return "mean";
        case EstimatorId::GaussianFair: return "gaussian-fair";
        case EstimatorId::GaussianPlugin: return "gaussian-plugin";
        case EstimatorId::NpHat: return "np-hat";
        case EstimatorId::NpCheck: return "np-check";
        case EstimatorId::GaussianTrue: return "gaussian-true";
        case EstimatorId::External: return "external";
    }
    throw InvalidArgument("to_string: unknown estimator id");
}

EstimatorId estimator_from_string(const std::string& name) {
    if (name == "mean") return EstimatorId::Mean;
    if (name == "gaussian-fair") return EstimatorId::GaussianFair;
    if (name == "gaussian-plugin") return EstimatorId::GaussianPlugin;
    if (name == "np-hat") return EstimatorId::NpHat;
    if (name == "np-check") return EstimatorId::NpCheck;
    if (name == "gaussian-true") return EstimatorId::GaussianTrue;
    if (name == "external") return EstimatorId::External;
    throw InvalidArgument("unknown estimator '" + name +
                          "' (expected mean, gaussian-fair, gaussian-plugin, np-hat, "
                          "np-check, gaussian-true or external)");
}

std::vector<double> aggregate(const PanelView& panel) {
    if (panel.rows == 0 || panel.cols == 0)
        throw InvalidArgument("aggregate: empty panel");
    std::vector<double> s(panel.rows, 0.0);
    for (std::size_t r = 0; r < panel.rows; ++r) {
        const double* row = panel.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < panel.cols; ++c) acc += row[c];
        s[r] = acc;
    }
    return s;
}

PortfolioStats portfolio_stats(const PanelView& panel) {
    if (panel.rows == 0 || panel.cols == 0)
        throw InvalidArgument("portfolio_stats: empty panel");
    const std::size_t n = panel.rows;
    const std::size_t d = panel.cols;

    PortfolioStats st;
    st.mu.assign(d, 0.0);
    st.cov.assign(d, 0.0);

    std::vector<double> s = aggregate(panel);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = panel.row(r);
        for (std::size_t c = 0; c < d; ++c) st.mu[c] += row[c];
        st.mu_s += s[r];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t c = 0; c < d; ++c) st.mu[c] *= inv_n;
    st.mu_s *= inv_n;

    for (std::size_t r = 0; r < n; ++r) {
        const double* row = panel.row(r);
        const double s_resid = s[r] - st.mu_s;
        st.var_s += s_resid * s_resid;
        for (std::size_t c = 0; c < d; ++c) st.cov[c] += (row[c] - st.mu[c]) * s_resid;
    }
    st.var_s *= inv_n;
    for (std::size_t c = 0; c < d; ++c) st.cov[c] *= inv_n;
    return st;
}

std::size_t var_rank(std::size_t n, RiskLevel beta) {
    if (n == 0) throw InvalidArgument("var_rank: empty sample");
    const std::size_t j =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * beta.value())) + 1;
    return std::min(j, n);
}

double order_statistic(std::span<const double> values, std::size_t j) {
    if (values.empty()) throw InvalidArgument("order_statistic: empty sample");
    if (j < 1 || j > values.size())
        throw IndexOutOfRange("order_statistic: rank " + std::to_string(j) +
                              " outside [1, " + std::to_string(values.size()) + "]");
    std::vector<double> work(values.begin(), values.end());
    std::nth_element(work.begin(), work.begin() + (j - 1), work.end());
    return work[j - 1];
}

double empirical_var(std::span<const double> values, RiskLevel beta) {
    return -order_statistic(values, var_rank(values.size(), beta));
}

TailSum tail_sum(std::span<const double> y, std::span<const double> xi, RiskLevel beta) {
    if (xi.empty()) throw InvalidArgument("tail_sum: empty sample");
    if (y.size() != xi.size())
        throw ShapeMismatch("tail_sum: y has length " + std::to_string(y.size()) +
                            ", xi has length " + std::to_string(xi.size()));
    TailSum t;
    t.threshold = order_statistic(xi, var_rank(xi.size(), beta));
    // Accumulate over the original order: the result is independent of the
    // selection algorithm used for the order statistic.
    for (std::size_t k = 0; k < xi.size(); ++k) {
        if (xi[k] <= t.threshold) {
            t.sum += y[k];
            ++t.count;
        }
    }
    return t;
}

double empirical_es(std::span<const double> values, RiskLevel alpha) {
    const TailSum t = tail_sum(values, values, alpha);
    return -t.sum / static_cast<double>(t.count);
}

}  // namespace fairalloc
