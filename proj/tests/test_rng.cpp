#include "doctest.h"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <vector>

#include "pptkit/rng.hpp"

using namespace pptkit;

TEST_CASE("counter rng is a pure function of key and counter") {
    CounterRng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_u64() != c.next_u64());
    CHECK(a.draws() == 101);
}

TEST_CASE("draw i is mix64 of key plus i golden gammas") {
    CounterRng r(7);
    for (std::uint64_t i = 1; i <= 5; ++i) CHECK(r.next_u64() == mix64(7 + i * 0x9e3779b97f4a7c15ULL));
}

TEST_CASE("derived seeds separate tags and indices") {
    CHECK(derive_seed(1, "choose", 0) != derive_seed(1, "sample", 0));
    CHECK(derive_seed(1, "choose", 0) != derive_seed(1, "choose", 1));
    CHECK(derive_seed(1, "choose", 0) != derive_seed(2, "choose", 0));
    CHECK(derive_seed(5, "x", 9) == derive_seed(5, "x", 9));
}

TEST_CASE("uniform draws stay in their ranges") {
    CounterRng r(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = r.uniform_open_low();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        const auto k = r.between(5, 20);
        CHECK(k >= 5);
        CHECK(k <= 20);
    }
    CHECK(r.below(1) == 0);
}

TEST_CASE("below is uniform under a chi-square test") {
    constexpr int kBins = 37;
    constexpr int kDraws = 370000;
    std::vector<double> counts(kBins, 0.0);
    CounterRng r(11);
    for (int i = 0; i < kDraws; ++i) counts[r.below(kBins)] += 1.0;
    const double expected = static_cast<double>(kDraws) / kBins;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(kBins - 1), 0.001));
    CHECK(chi2 < critical);
}

TEST_CASE("gaussian draws have unit moments") {
    CounterRng r(5);
    constexpr int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = r.gaussian();
        CHECK(std::isfinite(g));
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 0.02);
}
