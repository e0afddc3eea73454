#include <doctest.h>

#include <cmath>
#include <random>

#include "dsrs/confidence.hpp"
#include "oracles.hpp"

using namespace dsrs;

TEST_CASE("binom_interval closed forms") {
    // All-successes lower bound is alpha^{1/N}.
    for (long long n : {100LL, 100000LL}) {
        const auto b = binom_interval({n, n}, 0.001, Sidedness::lower_only);
        CHECK(b.lo == doctest::Approx(std::pow(0.001, 1.0 / n)).epsilon(1e-10));
        CHECK(b.hi == 1.0);
        CHECK(b.confidence == doctest::Approx(0.999));
    }
    const auto z = binom_interval({50, 0}, 0.05, Sidedness::lower_only);
    CHECK(z.lo == 0.0);
    const auto t = binom_interval({50, 0}, 0.05, Sidedness::two_sided);
    CHECK(t.lo == 0.0);
    CHECK(t.hi < 1.0);
    const auto f = binom_interval({50, 50}, 0.05, Sidedness::two_sided);
    CHECK(f.hi == 1.0);
    CHECK(f.lo > 0.0);
}

TEST_CASE("binom_interval matches the binomial tail-sum oracle") {
    const int n = 100, s = 60;
    const double alpha = 0.05;
    const auto b = binom_interval({n, s}, alpha, Sidedness::two_sided);
    // Lower: Pr[X >= s | lo] = alpha/2; upper: Pr[X <= s | hi] = alpha/2.
    const double lo = oracle::bisect(
        [&](double p) { return oracle::binom_upper_tail(n, s, p); }, 0.5 * alpha, 0.0, 1.0);
    const double hi = oracle::bisect(
        [&](double p) { return oracle::binom_upper_tail(n, s + 1, p); }, 1.0 - 0.5 * alpha,
        0.0, 1.0);
    CHECK(b.lo == doctest::Approx(lo).epsilon(1e-9));
    CHECK(b.hi == doctest::Approx(hi).epsilon(1e-9));
}

TEST_CASE("binom_interval oracle cross-check on a small grid") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 20 + (int)(oracle::uniform01(rng) * 400);
        const int s = 1 + (int)(oracle::uniform01(rng) * (n - 1));
        const double alpha = 0.01 + 0.2 * oracle::uniform01(rng);
        const auto b = binom_interval({n, s}, alpha, Sidedness::two_sided);
        // At the bounds the exact tail probabilities equal alpha/2.
        CHECK(oracle::binom_upper_tail(n, s, b.lo) ==
              doctest::Approx(0.5 * alpha).epsilon(1e-7));
        CHECK(1.0 - oracle::binom_upper_tail(n, s + 1, b.hi) ==
              doctest::Approx(0.5 * alpha).epsilon(1e-7));
        CHECK(b.lo < (double)s / n);
        CHECK(b.hi > (double)s / n);
    }
}

TEST_CASE("binom_interval monotone in successes; lower_only doubling identity") {
    const int n = 500;
    double prev_lo = -1.0, prev_hi = -1.0;
    for (int s = 0; s <= n; s += 25) {
        const auto b = binom_interval({n, s}, 0.01, Sidedness::two_sided);
        CHECK(b.lo >= prev_lo);
        CHECK(b.hi >= prev_hi);
        prev_lo = b.lo;
        prev_hi = b.hi;
    }
    for (int s : {1, 250, 499}) {
        const auto one = binom_interval({n, s}, 0.02, Sidedness::lower_only);
        const auto two = binom_interval({n, s}, 0.04, Sidedness::two_sided);
        CHECK(one.lo == doctest::Approx(two.lo).epsilon(1e-12));
    }
}

TEST_CASE("coverage simulation") {
    std::mt19937_64 rng(99);
    const int runs = 10000, n = 1000;
    const double alpha = 0.05;
    int covered = 0;
    for (int i = 0; i < runs; ++i) {
        const double p = 0.1 + 0.8 * ((i % 9) / 8.0);
        int s = 0;
        for (int j = 0; j < n; ++j) {
            if (oracle::uniform01(rng) < p) ++s;
        }
        const auto b = binom_interval({n, s}, alpha, Sidedness::two_sided);
        if (b.lo <= p && p <= b.hi) ++covered;
    }
    const double frac = (double)covered / runs;
    const double sd = std::sqrt(alpha * (1.0 - alpha) / runs);
    CHECK(frac >= (1.0 - alpha) - 3.0 * sd);
}

TEST_CASE("split_budget and fallback") {
    const auto [ap, aq] = split_budget(0.001);
    CHECK(ap == doctest::Approx(0.0005));
    CHECK(aq == doctest::Approx(0.0005));
    CHECK(ap + aq == doctest::Approx(0.001));
    const auto [bp, bq] = split_budget(0.2);
    CHECK(bp == doctest::Approx(0.1));
    CHECK(bq == doctest::Approx(0.1));

    CHECK(fallback_decision({1000, 1000}));
    CHECK_FALSE(fallback_decision({1000, 999}));
    // Merged record conserves the budget.
    SamplingRecord p{50000, 50000}, q{50000, 0};
    SamplingRecord merged{p.trials + q.trials, p.successes};
    CHECK(merged.trials == 100000);
}
