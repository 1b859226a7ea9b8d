#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairalloc/types.hpp"

namespace fairalloc {

/// Row sums of the panel: the aggregate portfolio P&L per day.
std::vector<double> aggregate(const PanelView& panel);

/// Sample moments with 1/n divisors. n = 1 yields zero variance.
PortfolioStats portfolio_stats(const PanelView& panel);

/// 1-based order-statistic rank for level beta: min(floor(n*beta)+1, n).
/// The clamp makes beta = 1 select the maximum.
std::size_t var_rank(std::size_t n, RiskLevel beta);

/// j-th smallest value, j 1-based in [1, n].
double order_statistic(std::span<const double> values, std::size_t j);

/// Empirical value-at-risk: -v^{(j)} with j = var_rank(n, beta).
double empirical_var(std::span<const double> values, RiskLevel beta);

/// Empirical expected shortfall: negated mean of the values in the lower
/// tail selected by 1{v_k <= v^{(j)}}. Ties at the threshold enter both
/// numerator and denominator.
double empirical_es(std::span<const double> values, RiskLevel alpha);

/// Lower-tail selection of xi at level beta under the literal indicator
/// 1{xi_k <= xi^{(j)}}, accumulated over the original input order so the
/// result does not depend on how the order statistic was obtained.
struct TailSum {
    double threshold = 0.0;  // xi^{(j)}
    std::size_t count = 0;   // tie-inclusive tail size, >= 1
    double sum = 0.0;        // sum of y_k over selected rows
};

/// Sums y over the rows whose xi falls in its lower beta-tail. y and xi
/// must have equal length; pass the same span twice for the tail sum of
/// xi itself.
TailSum tail_sum(std::span<const double> y, std::span<const double> xi, RiskLevel beta);

}  // namespace fairalloc
