#include "fairalloc/bn.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "fairalloc/core.hpp"
#include "fairalloc/normal.hpp"
#include "fairalloc/rng.hpp"

namespace fairalloc {

namespace {

constexpr std::uint64_t kBnStream = 0xb17;
constexpr std::size_t kChunk = 1u << 16;

std::string g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// CRC32 (IEEE), table built on first use.
std::uint32_t crc32(const std::string& data) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xffffffffu;
    for (unsigned char ch : data) crc = table[(crc ^ ch) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

long long alpha_key(double alpha) { return std::llround(alpha * 1e6); }

}  // namespace

BnEntry solve_bn(std::size_t n, RiskLevel alpha, std::size_t mc_samples, double tol,
                 std::uint64_t seed, unsigned threads) {
    if (n < 2) throw InvalidN("solve_bn: n must be at least 2, got " + std::to_string(n));
    if (mc_samples < 1000) throw InvalidArgument("solve_bn: mc_samples too small");
    if (!(tol > 0.0)) throw InvalidArgument("solve_bn: tol must be positive");

    // Common random numbers: one (G, V) sample reused for every candidate
    // b, which makes the objective continuous and strictly decreasing.
    std::vector<double> g(mc_samples);
    std::vector<double> v(mc_samples);
    const double g_scale = std::sqrt(1.0 + 1.0 / static_cast<double>(n));
    const double chi_dof = static_cast<double>(n - 1);
    const double inv_n = 1.0 / static_cast<double>(n);
    const Rng root(seed, kBnStream);
    parallel_chunks(mc_samples, kChunk, threads,
                    [&](std::size_t chunk, std::size_t first, std::size_t len) {
                        Rng rng = root.substream(chunk);
                        for (std::size_t k = first; k < first + len; ++k) {
                            g[k] = g_scale * rng.normal();
                            v[k] = std::sqrt(rng.chi_squared(chi_dof) * inv_n);
                        }
                    });

    std::vector<double> y(mc_samples);
    auto es_at = [&](double b) {
        for (std::size_t k = 0; k < mc_samples; ++k) y[k] = g[k] + b * v[k];
        return empirical_es(y, alpha);
    };

    const double c = es_factor(alpha.value());
    double lo = 0.5 * c;
    double hi = 3.0 * c;
    const double es_lo = es_at(lo);
    const double es_hi = es_at(hi);
    if (!(es_lo > 0.0) || !(es_hi < 0.0))
        throw NoConvergence("solve_bn: bracket [" + g12(lo) + ", " + g12(hi) +
                            "] does not straddle the root (ES " + g12(es_lo) + ", " +
                            g12(es_hi) + ")");
    const double slope = (es_hi - es_lo) / (hi - lo);

    double b = 0.0;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        b = 0.5 * (lo + hi);
        const double es_mid = es_at(b);
        if (std::fabs(es_mid) < tol) {
            converged = true;
            break;
        }
        if (es_mid > 0.0)
            lo = b;
        else
            hi = b;
    }
    if (!converged)
        throw NoConvergence("solve_bn: |ES| did not fall below tol within 100 bisections");

    // Batch-means standard error of the ES estimate at the root; the
    // root error adds the bisection tolerance divided by the slope.
    const std::size_t n_batches = 100;
    const std::size_t batch = mc_samples / n_batches;
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n_batches; ++i) {
        const double es_b = empirical_es(
            std::span<const double>(y.data() + i * batch, batch), alpha);
        const double delta = es_b - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (es_b - mean);
    }
    const double sd_batch = std::sqrt(m2 / static_cast<double>(n_batches - 1));
    const double se_es = sd_batch / std::sqrt(static_cast<double>(n_batches));

    BnEntry entry;
    entry.n = n;
    entry.alpha = alpha.value();
    entry.value = b;
    entry.precision = (tol + 3.0 * se_es) / std::max(std::fabs(slope), 0.05);
    entry.method = "mc-root";
    return entry;
}

BnCache::BnCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // missing file: empty cache
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    if (content.empty()) return;

    const std::size_t trailer = content.rfind("#crc32 ");
    if (trailer == std::string::npos || (trailer != 0 && content[trailer - 1] != '\n'))
        throw CorruptCache("bn cache " + path_ + ": missing checksum trailer");
    std::istringstream tline(content.substr(trailer));
    std::string tag;
    std::string hex;
    std::string rest;
    tline >> tag >> hex;
    if (tline >> rest) throw CorruptCache("bn cache " + path_ + ": trailing garbage");
    std::uint32_t expected = 0;
    try {
        expected = static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16));
    } catch (const std::exception&) {
        throw CorruptCache("bn cache " + path_ + ": malformed checksum");
    }
    const std::string body = content.substr(0, trailer);
    if (crc32(body) != expected)
        throw CorruptCache("bn cache " + path_ + ": checksum mismatch");

    std::istringstream lines(body);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream rec(line);
        BnEntry e;
        if (!(rec >> e.n >> e.alpha >> e.value >> e.precision >> e.method))
            throw CorruptCache("bn cache " + path_ + ": malformed record at line " +
                               std::to_string(lineno));
        entries_[{e.n, alpha_key(e.alpha)}] = e;
    }
}

std::optional<BnEntry> BnCache::lookup(std::size_t n, RiskLevel alpha) const {
    const auto it = entries_.find({n, alpha_key(alpha.value())});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void BnCache::store(const BnEntry& entry) {
    entries_[{entry.n, alpha_key(entry.alpha)}] = entry;
    std::string body;
    for (const auto& [key, e] : entries_) {
        body += std::to_string(e.n) + " " + g12(e.alpha) + " " + g12(e.value) + " " +
                g12(e.precision) + " " + e.method + "\n";
    }
    char trailer[32];
    std::snprintf(trailer, sizeof(trailer), "#crc32 %08x\n", crc32(body));

    const std::string tmp = path_ + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("bn cache: cannot write " + tmp);
        out << body << trailer;
        if (!out) throw Error("bn cache: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path_.c_str()) != 0)
        throw Error("bn cache: cannot replace " + path_);
}

BnEntry resolve_bn(BnCache* cache, std::size_t n, RiskLevel alpha, std::size_t mc_samples,
                   double tol, std::uint64_t seed, unsigned threads) {
    if (cache != nullptr) {
        if (auto hit = cache->lookup(n, alpha)) return *hit;
    }
    BnEntry entry = solve_bn(n, alpha, mc_samples, tol, seed, threads);
    // round through the serialized form, so a cold solve and a later
    // cache hit feed downstream computations the same bits
    entry.value = std::strtod(g12(entry.value).c_str(), nullptr);
    entry.precision = std::strtod(g12(entry.precision).c_str(), nullptr);
    if (cache != nullptr) cache->store(entry);
    return entry;
}

}  // namespace fairalloc
