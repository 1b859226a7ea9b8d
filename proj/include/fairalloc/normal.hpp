#pragma once

namespace fairalloc {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF (via erfc, accurate in both tails).
double norm_cdf(double x);

/// Standard normal quantile, Wichura's AS241 double-precision algorithm.
/// Absolute error well below 1e-10 on (1e-6, 1-1e-6) and usable over the
/// whole open unit interval.
double norm_ppf(double p);

/// phi(Phi^{-1}(alpha)) / alpha, the Gaussian expected-shortfall factor.
/// es_factor(0.05) = 2.06271281...
double es_factor(double alpha);

}  // namespace fairalloc
