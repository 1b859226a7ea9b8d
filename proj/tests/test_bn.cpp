#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "fairalloc/bn.hpp"
#include "fairalloc/core.hpp"
#include "fairalloc/normal.hpp"
#include "fairalloc/rng.hpp"
#include "fairalloc/types.hpp"

using namespace fairalloc;

namespace {

std::string temp_path(const char* tag) {
    static int counter = 0;
    return std::string("bn_cache_test_") + tag + "_" + std::to_string(counter++) + ".txt";
}

struct FileGuard {
    std::string path;
    explicit FileGuard(std::string p) : path(std::move(p)) {}
    ~FileGuard() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// Independent check sample for ES_alpha(G + b V), drawn with its own
// seed so it shares nothing with the solver stream.
double independent_es_at(double b, std::size_t n, double alpha, std::uint64_t seed,
                         std::size_t m) {
    Rng rng(seed, 777);
    const double g_scale = std::sqrt(1.0 + 1.0 / static_cast<double>(n));
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> y(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double g = g_scale * rng.normal();
        const double v = std::sqrt(rng.chi_squared(static_cast<double>(n) - 1.0) * inv_n);
        y[k] = g + b * v;
    }
    return empirical_es(y, RiskLevel(alpha));
}

}  // namespace

TEST_CASE("solved constant zeroes the defining expectation") {
    const BnEntry e = solve_bn(50, RiskLevel(0.05), 400000, 5e-4, 12345);
    CHECK(e.n == 50);
    CHECK(e.alpha == doctest::Approx(0.05));
    CHECK(e.method == "mc-root");
    CHECK(e.precision > 0.0);
    // independent replication of the objective at the root
    const double es_root = independent_es_at(e.value, 50, 0.05, 999, 400000);
    CHECK(std::fabs(es_root) < 0.02);
    // the objective is decreasing through the root
    CHECK(independent_es_at(e.value - 0.1, 50, 0.05, 999, 400000) > 0.01);
    CHECK(independent_es_at(e.value + 0.1, 50, 0.05, 999, 400000) < -0.01);
}

TEST_CASE("constant shrinks toward the Gaussian ES factor as n grows") {
    const double c = es_factor(0.05);
    const BnEntry b5 = solve_bn(5, RiskLevel(0.05), 1000000, 5e-4, 7);
    const BnEntry b50 = solve_bn(50, RiskLevel(0.05), 1000000, 5e-4, 7);
    const BnEntry b5000 = solve_bn(5000, RiskLevel(0.05), 1000000, 5e-4, 7);
    CHECK(b5.value > b50.value);
    CHECK(b50.value > b5000.value);
    CHECK(b5000.value == doctest::Approx(c).epsilon(0.02));
    CHECK(b5.value > c);
}

TEST_CASE("solver is deterministic and thread-count independent") {
    const BnEntry a = solve_bn(25, RiskLevel(0.1), 200000, 5e-4, 99, 1);
    const BnEntry b = solve_bn(25, RiskLevel(0.1), 200000, 5e-4, 99, 1);
    const BnEntry c = solve_bn(25, RiskLevel(0.1), 200000, 5e-4, 99, 4);
    CHECK(a.value == b.value);
    CHECK(a.precision == b.precision);
    CHECK(a.value == c.value);
    CHECK(a.precision == c.precision);
    // different seed moves the estimate within noise but not to the bit
    const BnEntry d = solve_bn(25, RiskLevel(0.1), 200000, 5e-4, 100, 1);
    CHECK(d.value != a.value);
    CHECK(d.value == doctest::Approx(a.value).epsilon(0.02));
}

TEST_CASE("solver input validation") {
    CHECK_THROWS_AS(solve_bn(0, RiskLevel(0.05), 10000), InvalidN);
    CHECK_THROWS_AS(solve_bn(1, RiskLevel(0.05), 10000), InvalidN);
    CHECK_THROWS_AS(solve_bn(10, RiskLevel(0.05), 999), InvalidArgument);
    CHECK_THROWS_AS(solve_bn(10, RiskLevel(0.05), 10000, 0.0), InvalidArgument);
    CHECK_THROWS_AS(solve_bn(10, RiskLevel(0.05), 10000, -1e-3), InvalidArgument);
}

TEST_CASE("cache round trip") {
    FileGuard guard(temp_path("roundtrip"));
    {
        BnCache cache(guard.path);
        CHECK(cache.size() == 0);
        CHECK(!cache.lookup(50, RiskLevel(0.05)).has_value());
        BnEntry e;
        e.n = 50;
        e.alpha = 0.05;
        e.value = 2.16317941031;
        e.precision = 3.02e-3;
        e.method = "mc-root";
        cache.store(e);
        BnEntry e2;
        e2.n = 250;
        e2.alpha = 0.01;
        e2.value = 2.9;
        e2.precision = 1e-3;
        e2.method = "mc-root";
        cache.store(e2);
        CHECK(cache.size() == 2);
    }
    BnCache reread(guard.path);
    CHECK(reread.size() == 2);
    const auto hit = reread.lookup(50, RiskLevel(0.05));
    REQUIRE(hit.has_value());
    CHECK(hit->value == doctest::Approx(2.16317941031).epsilon(1e-12));
    CHECK(hit->precision == doctest::Approx(3.02e-3).epsilon(1e-12));
    CHECK(hit->method == "mc-root");
    // key rounds alpha to 1e-6, so a nearby query still hits
    CHECK(reread.lookup(50, RiskLevel(0.05 + 1e-9)).has_value());
    CHECK(!reread.lookup(50, RiskLevel(0.051)).has_value());
    CHECK(!reread.lookup(51, RiskLevel(0.05)).has_value());
}

TEST_CASE("store replaces an existing key") {
    FileGuard guard(temp_path("replace"));
    BnCache cache(guard.path);
    BnEntry e;
    e.n = 10;
    e.alpha = 0.05;
    e.value = 2.5;
    e.precision = 1e-3;
    e.method = "mc-root";
    cache.store(e);
    e.value = 2.6;
    cache.store(e);
    CHECK(cache.size() == 1);
    CHECK(BnCache(guard.path).lookup(10, RiskLevel(0.05))->value == doctest::Approx(2.6));
}

TEST_CASE("missing and empty cache files are valid") {
    CHECK_NOTHROW(BnCache("definitely_absent_cache_file.txt"));
    FileGuard guard(temp_path("empty"));
    spit(guard.path, "");
    CHECK(BnCache(guard.path).size() == 0);
}

TEST_CASE("corruption is detected") {
    FileGuard guard(temp_path("corrupt"));
    {
        BnCache cache(guard.path);
        BnEntry e;
        e.n = 50;
        e.alpha = 0.05;
        e.value = 2.1632;
        e.precision = 3e-3;
        e.method = "mc-root";
        cache.store(e);
    }
    const std::string good = slurp(guard.path);
    REQUIRE(!good.empty());

    SUBCASE("flipped payload byte") {
        std::string bad = good;
        const auto pos = bad.find("2.1632");
        REQUIRE(pos != std::string::npos);
        bad[pos] = '3';
        spit(guard.path, bad);
        CHECK_THROWS_AS(BnCache(guard.path), CorruptCache);
    }
    SUBCASE("truncated trailer") {
        const auto pos = good.rfind("#crc32");
        REQUIRE(pos != std::string::npos);
        spit(guard.path, good.substr(0, pos));
        CHECK_THROWS_AS(BnCache(guard.path), CorruptCache);
    }
    SUBCASE("truncated payload") {
        spit(guard.path, good.substr(0, good.size() / 2));
        CHECK_THROWS_AS(BnCache(guard.path), CorruptCache);
    }
    SUBCASE("garbage record") {
        spit(guard.path, "not a record\n#crc32 00000000\n");
        CHECK_THROWS_AS(BnCache(guard.path), CorruptCache);
    }
}

TEST_CASE("resolve consults the cache before solving") {
    FileGuard guard(temp_path("resolve"));
    {
        BnCache cache(guard.path);
        BnEntry fake;
        fake.n = 50;
        fake.alpha = 0.05;
        fake.value = 123.456;  // impossible as a real root, so a hit is provable
        fake.precision = 1e-9;
        fake.method = "mc-root";
        cache.store(fake);
        const BnEntry got = resolve_bn(&cache, 50, RiskLevel(0.05), 100000, 5e-4, 1);
        CHECK(got.value == doctest::Approx(123.456));
    }
    {
        // cold key solves and persists
        BnCache cache(guard.path);
        const BnEntry solved = resolve_bn(&cache, 10, RiskLevel(0.1), 100000, 5e-4, 1);
        CHECK(solved.method == "mc-root");
        CHECK(BnCache(guard.path).lookup(10, RiskLevel(0.1)).has_value());
    }
    // null cache is a pure solve
    const BnEntry pure = resolve_bn(nullptr, 10, RiskLevel(0.1), 100000, 5e-4, 1);
    CHECK(pure.method == "mc-root");
}
