#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace fairalloc {

// Deterministic stream-splittable RNG.
//
// A (seed, stream) pair is hashed through splitmix64 into the mt19937_64
// seed state. Distinct streams derived from one user seed are independent
// for practical purposes, and every consumer of randomness in the library
// draws from its own stream keyed by a structural index (row, replication,
// chunk). Results are therefore reproducible across platforms and across
// thread counts.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    // Substream derivation: child streams of a stream are themselves
    // distinct from sibling and parent streams.
    Rng substream(std::uint64_t stream) const;

    std::uint64_t next_u64();

    // Uniform on (0, 1), never returning the endpoints.
    double uniform();

    // Standard normal via the inverse transform. Inherits the accuracy of
    // norm_ppf and keeps one draw per variate, which keeps substream
    // consumption predictable.
    double normal();

    // Gamma(shape, 1) with Marsaglia-Tsang squeeze; shape < 1 is boosted
    // through Gamma(shape + 1) * U^{1/shape}.
    double gamma(double shape);

    // Chi-squared with (possibly fractional) degrees of freedom.
    double chi_squared(double dof);

  private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t stream_;
};

// Splits [0, count) into fixed-size chunks and invokes fn(chunk_index,
// first, count) for each, distributing chunks over at most max_threads
// workers. The chunk grid depends only on count, so results that seed an
// Rng substream per chunk are identical for every thread count.
void parallel_chunks(std::size_t count, std::size_t chunk_size, unsigned max_threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Global default used by CLI-facing code paths when no thread override is
// given. The library itself never reads hardware concurrency; callers opt
// in to parallelism explicitly.
inline constexpr unsigned kDefaultThreads = 1;

}  // namespace fairalloc
