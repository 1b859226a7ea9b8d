#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairalloc/estimators.hpp"
#include "fairalloc/types.hpp"

namespace fairalloc {

/// Realized secured margins y_{k,i} = x_{k,i} + a_{k,i} and their row
/// aggregates xi_k over m backtest days.
struct BacktestSeries {
    std::vector<double> y;   // row-major m x d
    std::size_t m = 0;
    std::size_t d = 0;
    std::vector<double> xi;  // length m, xi_k = sum_i y_{k,i}
    EstimatorId estimator_id = EstimatorId::External;
    double alpha = 0.0;
    std::size_t window = 0;

    double y_at(std::size_t k, std::size_t i) const { return y[k * d + i]; }
    void validate() const;
};

struct Upsilon {
    double value = 1.0;
    bool attained = false;
};

struct WShift {
    double w_minus = 0.0;  // in [0, alpha]
    double w_plus = 0.0;   // in [0, 1 - alpha]
    double w = 0.0;        // -w_minus when w_minus < w_plus, else +w_plus
};

/// Everything the backtest produces: deviation statistics at the
/// reference level, level-shift statistics on a grid and at the exact
/// order-statistic boundaries, and the full level curves for plotting.
struct FairnessReport {
    double alpha = 0.0;
    double grid_step = 0.0;
    double g_total_at_alpha = 0.0;
    std::vector<double> g_margin_at_alpha;  // length d

    Upsilon upsilon;        // grid search
    Upsilon upsilon_exact;  // step-function boundary
    std::vector<double> w_minus, w_plus, w;                    // grid search, length d
    std::vector<double> w_minus_exact, w_plus_exact, w_exact;  // boundaries, length d

    std::vector<double> grid;     // beta values, ascending, last = 1
    std::vector<double> g_curve;  // G_beta per grid point
    std::vector<std::vector<double>> g_margin_curves;  // [d][grid]

    std::vector<std::string> flags;  // e.g. "upsilon-not-attained"
};

/// Day-k allocation from the n observations preceding evaluation day
/// n + k. data must hold at least n + 1 rows; every day must succeed or
/// the run aborts with the failing day in the error message.
std::vector<AllocationVector> rolling_allocations(const PnlSample& data, EstimatorId id,
                                                  RiskLevel alpha, std::size_t n,
                                                  const EstimatorContext& ctx = {});

/// Pairs realized P&L rows with their allocations: y = x + a row-wise,
/// xi = row sums of y.
BacktestSeries secured_positions(const PanelView& realized,
                                 const std::vector<AllocationVector>& allocs);

/// rolling_allocations + secured_positions on one panel of n + m rows.
BacktestSeries run_backtest(const PnlSample& data, EstimatorId id, RiskLevel alpha,
                            std::size_t n, const EstimatorContext& ctx = {});

/// Negated tail mean of the aggregated secured positions at level beta.
double g_total(const BacktestSeries& series, RiskLevel beta);

/// Negated tail mean of margin i (0-based) over the tail selected by xi.
double g_margin(const BacktestSeries& series, std::size_t i, RiskLevel beta);

/// Smallest grid point beta in {step, 2 step, ..., 1} with G_beta <= 0;
/// {1, false} when the whole curve is positive.
Upsilon upsilon(const BacktestSeries& series, double grid_step);

/// Exact infimum of {beta : G_beta <= 0}. G_beta is a step function of
/// the rank j = floor(m beta) + 1, so the infimum is (j* - 1)/m for the
/// smallest rank j* with a non-positive tail mean.
Upsilon upsilon_exact(const BacktestSeries& series);

/// Minimal level shifts for margin i on the epsilon grid {0, step, ...}.
/// Downward candidates stop before beta = 0 (the level must stay
/// positive); upward candidates include the endpoint beta = 1. The
/// conventions inf(empty) = alpha and 1 - alpha apply.
WShift w_shifts(const BacktestSeries& series, std::size_t i, RiskLevel alpha,
                double grid_step);

/// Exact-infimum variant: sign changes can only happen at rank
/// boundaries, so w_minus = alpha - j/m for the largest rank j below the
/// reference rank whose tail mean changes sign, and w_plus =
/// (j - 1)/m - alpha for the smallest such rank above.
WShift w_shifts_exact(const BacktestSeries& series, std::size_t i, RiskLevel alpha);

/// Full report: statistics at alpha, grid and exact shift statistics,
/// and curves over the whole grid.
FairnessReport fairness_report(const BacktestSeries& series, RiskLevel alpha,
                               double grid_step);

struct JarqueBera {
    double statistic = 0.0;
    bool exceeds_1pct = false;  // statistic > 9.21, the chi2(2) 99% point
};

/// Moment-based normality diagnostic m/6 (skew^2 + (kurtosis - 3)^2 / 4).
JarqueBera jarque_bera(std::span<const double> values);

}  // namespace fairalloc
