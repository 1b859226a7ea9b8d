#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "fairalloc/types.hpp"

namespace fairalloc {

/// The multiplier b_n making -mu_hat + sigma_hat * b_n an unbiased ES
/// estimator for Gaussian samples of size n, together with solve metadata.
struct BnEntry {
    std::size_t n = 0;
    double alpha = 0.0;
    double value = 0.0;
    double precision = 0.0;  // estimated absolute error of value
    std::string method;      // "mc-root" or "closed-form"
};

/// Solves ES_alpha(G + b * V) = 0 for b by bisection over a common
/// Monte Carlo sample, where G is centered normal with variance 1 + 1/n
/// and V = sqrt(chi2_{n-1} / n), independent. This is the sampling law of
/// (S - mu_hat, sigma_hat) for a standard normal population, reduced by
/// location-scale invariance, so the root is the unbiasedness constant.
///
/// The map b -> ES is strictly decreasing (V > 0 almost surely); the
/// bracket [0.5 c, 3 c] with c = phi(Phi^{-1}(alpha)) / alpha is verified
/// to straddle the root before iterating.
///
/// Deterministic for fixed (n, alpha, mc_samples, tol, seed) at any
/// thread count: the (G, V) stream is generated from per-chunk substreams
/// on a fixed chunk grid.
BnEntry solve_bn(std::size_t n, RiskLevel alpha, std::size_t mc_samples = 10000000,
                 double tol = 5e-4, std::uint64_t seed = 42, unsigned threads = 1);

/// Plain-text persistent store for solved constants, keyed by
/// (n, alpha rounded to 1e-6). One record per line
/// `n alpha value precision method`, 12 significant digits, with a CRC32
/// trailer guarding against truncation and corruption.
class BnCache {
  public:
    /// Loads the file when present. Throws CorruptCache on checksum or
    /// format failure. A missing or empty file is a valid empty cache.
    explicit BnCache(std::string path);

    std::optional<BnEntry> lookup(std::size_t n, RiskLevel alpha) const;

    /// Inserts or replaces the entry and rewrites the file atomically
    /// (temp file + rename).
    void store(const BnEntry& entry);

    const std::string& path() const { return path_; }
    std::size_t size() const { return entries_.size(); }

  private:
    std::string path_;
    std::map<std::pair<std::size_t, long long>, BnEntry> entries_;
};

/// Cache-through resolution: lookup, else solve and persist. cache may be
/// null for a pure solve.
BnEntry resolve_bn(BnCache* cache, std::size_t n, RiskLevel alpha,
                   std::size_t mc_samples = 10000000, double tol = 5e-4,
                   std::uint64_t seed = 42, unsigned threads = 1);

}  // namespace fairalloc
