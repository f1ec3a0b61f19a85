#include <doctest.h>

#include <cmath>
#include <vector>

#include "vlcsim/rng.hpp"

using namespace vlcsim;

TEST_CASE("identical seeds give identical streams") {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
}

TEST_CASE("uniform01 stays in [0, 1) and is mean-centered") {
    Rng rng(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform(lo, hi) respects bounds and degenerate intervals") {
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-3.0, 5.0);
        REQUIRE(v >= -3.0);
        REQUIRE(v < 5.0);
    }
    for (int i = 0; i < 10; ++i) CHECK(rng.uniform(2.5, 2.5) == 2.5);
}

TEST_CASE("uniform_int covers [0, n) roughly evenly") {
    Rng rng(13);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const int k = rng.uniform_int(7);
        REQUIRE(k >= 0);
        REQUIRE(k < 7);
        ++counts[k];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("normal has requested mean and spread") {
    Rng rng(21);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(3.0, 2.0);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(mean == doctest::Approx(3.0).epsilon(0.01));
    CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("bernoulli matches its probability") {
    Rng rng(31);
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3);
    CHECK(static_cast<double>(hits) / n == doctest::Approx(0.3).epsilon(0.03));
    Rng r2(32);
    for (int i = 0; i < 100; ++i) {
        CHECK(r2.bernoulli(1.0));
        CHECK_FALSE(r2.bernoulli(0.0));
    }
}

TEST_CASE("derived stream seeds are distinct and reproducible") {
    const std::uint64_t base = 42;
    CHECK(Rng::derive_seed(base, 0) != Rng::derive_seed(base, 1));
    CHECK(Rng::derive_seed(base, 0) == Rng::derive_seed(base, 0));
    CHECK(Rng::derive_seed(base, 5) != Rng::derive_seed(base + 1, 5));
    Rng a(Rng::derive_seed(base, 3)), b(Rng::derive_seed(base, 3));
    CHECK(a.next_u64() == b.next_u64());
}
