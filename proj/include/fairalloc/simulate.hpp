#pragma once

#include <cstdint>
#include <vector>

#include "fairalloc/estimators.hpp"
#include "fairalloc/types.hpp"

namespace fairalloc {

/// Multivariate Student t specified by its exact mean and covariance.
/// The scale matrix is (nu - 2)/nu * sigma so that Cov equals sigma.
struct StudentTModel {
    std::vector<double> mu;
    std::vector<double> sigma;  // row-major d x d target covariance
    double nu = 0.0;            // degrees of freedom, must exceed 2

    std::size_t dim() const { return mu.size(); }
    double sigma_at(std::size_t i, std::size_t j) const { return sigma[i * dim() + j]; }
    void validate() const;
};

/// i.i.d. multivariate normal rows via the symmetric square root of
/// sigma. Deterministic under (seed, rows) for any thread count.
PnlSample mvn_sample(const GaussianModel& model, std::size_t rows, std::uint64_t seed,
                     unsigned threads = 1);

/// i.i.d. multivariate t rows: mu + A z / sqrt(q / nu) with q chi-squared
/// with nu degrees of freedom and A the square root of the scale matrix.
PnlSample mvt_sample(const StudentTModel& model, std::size_t rows, std::uint64_t seed,
                     unsigned threads = 1);

/// Nested Monte Carlo fairness check. Each replication draws a fresh
/// training sample of size n, applies the estimator, then evaluates the
/// secured margins on one independent row. residual_i is the mean of
/// margin i over the replications whose aggregate secured value falls in
/// its own empirical alpha-tail; a fair estimator drives every residual
/// to zero. se are batch-means standard errors (100 batches).
struct VerifyResult {
    std::vector<double> residual;  // per constituent
    std::vector<double> se;
    double aggregate_residual = 0.0;  // sum of residuals, = negated empirical
                                      // ES of the aggregate secured values
    double aggregate_se = 0.0;
};

VerifyResult verify_fairness(EstimatorId id, const GaussianModel& model, std::size_t n,
                             RiskLevel alpha, std::size_t replications, std::uint64_t seed,
                             const EstimatorContext& ctx = {}, unsigned threads = 1);

}  // namespace fairalloc
