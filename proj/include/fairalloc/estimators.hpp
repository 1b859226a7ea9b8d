#pragma once

#include <vector>

#include "fairalloc/core.hpp"
#include "fairalloc/types.hpp"

namespace fairalloc {

/// Least-squares coefficients of each constituent against the aggregate.
struct RegressionCoefficients {
    std::vector<double> beta;       // slope, sums to 1
    std::vector<double> alpha_reg;  // intercept, sums to 0
};

/// beta_i = cov_i / var_s, alpha_reg_i = mu_i - beta_i * mu_s.
/// Throws DegenerateVariance when var_s = 0 (constant aggregate).
RegressionCoefficients regression_coeffs(const PortfolioStats& stats);

/// Exact Gaussian expected shortfall of the aggregate:
/// -sum(mu) + sqrt(Var(S)) * phi(Phi^{-1}(alpha)) / alpha.
double gaussian_true_es(const GaussianModel& model, RiskLevel alpha);

/// Exact Gaussian allocation a_i = -mu_i + Cov(X_i,S) * phi(Phi^{-1}(alpha))
/// / (alpha * sqrt(Var(S))). Sums to gaussian_true_es.
AllocationVector gaussian_true_allocation(const GaussianModel& model, RiskLevel alpha);

/// Plug-in Gaussian ES from sample moments: -mu_s + sigma_s * factor.
double plugin_gaussian_es(const PortfolioStats& stats, RiskLevel alpha);

/// Unbiased Gaussian ES: -mu_s + sigma_s * b_n, with b_n supplied by the
/// bn module for the matching (n, alpha).
double unbiased_gaussian_es(const PortfolioStats& stats, RiskLevel alpha, double bn);

/// Negated column means. Fair for every population with finite mean.
AllocationVector mean_allocation(const PanelView& panel);

/// Fair Gaussian allocation estimator: -alpha_reg_i + beta_i * R, where R
/// is the unbiased Gaussian ES built from bn.
AllocationVector estimator_B(const PanelView& panel, RiskLevel alpha, double bn);

/// Plug-in Gaussian allocation estimator: -mu_i + cov_i * factor / sigma_s.
AllocationVector estimator_C(const PanelView& panel, RiskLevel alpha);

/// Nonparametric tail average with tie-inclusive tail-count denominator.
AllocationVector estimator_D_hat(const PanelView& panel, RiskLevel alpha);

/// Nonparametric tail sum divided by n * alpha.
AllocationVector estimator_D_check(const PanelView& panel, RiskLevel alpha);

/// Extra inputs needed by some estimators in the uniform dispatch.
struct EstimatorContext {
    bool has_bn = false;
    double bn = 0.0;                       // gaussian-fair only
    const GaussianModel* model = nullptr;  // gaussian-true only
};

/// Uniform entry point used by rolling backtests and the CLI. Throws
/// InvalidArgument when the context lacks what the estimator requires or
/// when id = external (externally supplied allocations are not computed).
AllocationVector compute_allocation(EstimatorId id, const PanelView& panel, RiskLevel alpha,
                                    const EstimatorContext& ctx = {});

}  // namespace fairalloc
