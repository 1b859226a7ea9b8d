#include "fairalloc/rng.hpp"

#include <cmath>
#include <thread>
#include <vector>

#include "fairalloc/normal.hpp"
#include "fairalloc/types.hpp"

namespace fairalloc {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // Two splitmix64 rounds decorrelate (seed, stream) pairs that differ
    // in a single low bit.
    std::uint64_t state = seed;
    std::uint64_t a = splitmix64(state);
    state ^= stream * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL;
    std::uint64_t b = splitmix64(state);
    return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(mix_seed(seed, stream)), seed_(seed), stream_(stream) {}

Rng Rng::substream(std::uint64_t stream) const {
    // Children are keyed off the parent's mixed identity so substream(k)
    // of distinct parents never collides.
    return Rng(mix_seed(seed_, stream_), stream + 1);
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
    // 53-bit mantissa, centered into open (0, 1).
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return norm_ppf(uniform()); }

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw InvalidArgument("gamma: shape must be positive");
    if (shape < 1.0) {
        const double boost = std::pow(uniform(), 1.0 / shape);
        return gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::chi_squared(double dof) {
    if (!(dof > 0.0)) throw InvalidArgument("chi_squared: dof must be positive");
    return 2.0 * gamma(0.5 * dof);
}

void parallel_chunks(std::size_t count, std::size_t chunk_size, unsigned max_threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (chunk_size == 0) throw InvalidArgument("parallel_chunks: chunk_size must be positive");
    if (count == 0) return;
    const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;

    auto run_chunk = [&](std::size_t chunk) {
        const std::size_t first = chunk * chunk_size;
        const std::size_t len = std::min(chunk_size, count - first);
        fn(chunk, first, len);
    };

    if (max_threads <= 1 || n_chunks == 1) {
        for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) run_chunk(chunk);
        return;
    }

    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(max_threads, n_chunks));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t chunk = w; chunk < n_chunks; chunk += workers) run_chunk(chunk);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace fairalloc
