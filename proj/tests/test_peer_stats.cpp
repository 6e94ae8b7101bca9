#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "peerfx/peer_stats.hpp"
#include "peerfx/rng.hpp"

using namespace peerfx;

TEST_CASE("loo mean: worked examples") {
    CHECK(loo_mean({0.5, 0.7, 0.9}, 0) == Catch::Approx(0.8));
    const std::vector<double> constant = {0.3, 0.3, 0.3, 0.3};
    for (std::size_t i = 0; i < constant.size(); ++i)
        CHECK(loo_mean(constant, i) == Catch::Approx(0.3));
    CHECK_THROWS_AS(loo_mean({0.5}, 0), NumericalError);
}

TEST_CASE("loo mean: n * course_mean identity holds to 1e-12") {
    auto rng = make_rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = draw_int(rng, 2, 25);
        std::vector<double> s(n);
        double total = 0.0;
        for (auto& v : s) {
            v = draw_uniform(rng);
            total += v;
        }
        const double mean = total / n;
        for (int i = 0; i < n; ++i) {
            const double loo = loo_mean(s, i);
            CHECK(std::fabs(n * mean - (s[i] + (n - 1) * loo)) < 1e-12);
        }
    }
}

TEST_CASE("loo mean: the group-size divisor variant stays available") {
    const std::vector<double> s = {0.5, 0.7, 0.9};
    CHECK(loo_mean(s, 0, LooDivisor::group_size) == Catch::Approx((0.7 + 0.9) / 3.0));
}

TEST_CASE("loo sd: worked examples and brute-force oracle") {
    CHECK(loo_sd({0.1, 0.6, 0.6, 0.6}, 0) == Catch::Approx(0.0));
    // peers {0.4, 0.8}: sample SD is 0.2828427...
    CHECK(loo_sd({0.5, 0.4, 0.8}, 0) == Catch::Approx(0.28284271247461906));
    CHECK_THROWS_AS(loo_sd({0.5, 0.4}, 0), NumericalError);

    auto rng = make_rng(18);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = draw_int(rng, 3, 20);
        std::vector<double> s(n);
        for (auto& v : s) v = draw_uniform(rng);
        const int i = draw_int(rng, 0, n - 1);
        // two-pass oracle over the peers
        std::vector<double> peers;
        for (int j = 0; j < n; ++j)
            if (j != i) peers.push_back(s[j]);
        double m = 0.0;
        for (double v : peers) m += v / peers.size();
        double ss = 0.0;
        for (double v : peers) ss += (v - m) * (v - m);
        const double oracle = std::sqrt(ss / (peers.size() - 1));
        CHECK(std::fabs(loo_sd(s, i) - oracle) < 1e-12);
    }
}

TEST_CASE("bin fractions: boundaries, partition, placement") {
    BinThresholds t;
    t.cuts = {0.2, 0.4, 0.6, 0.8};
    SECTION("all peers above the top cut") {
        const std::vector<double> s = {0.5, 0.85, 0.9, 0.95};
        const auto f = bin_fractions(s, 0, t);
        CHECK(f == std::vector<double>{0, 0, 0, 0, 1});
    }
    SECTION("fractions always sum to one") {
        auto rng = make_rng(19);
        for (int rep = 0; rep < 30; ++rep) {
            const int n = draw_int(rng, 2, 15);
            std::vector<double> s(n);
            for (auto& v : s) v = draw_uniform(rng);
            const auto f = bin_fractions(s, 0, t);
            double total = 0.0;
            for (double v : f) total += v;
            CHECK(std::fabs(total - 1.0) < 1e-12);
        }
    }
    SECTION("ten peers placed two per quintile") {
        std::vector<double> s = {0.5};  // the individual, ignored
        for (double base : {0.05, 0.25, 0.45, 0.65, 0.85})
            for (double off : {0.0, 0.05}) s.push_back(base + off);
        const auto f = bin_fractions(s, 0, t);
        for (double v : f) CHECK(v == Catch::Approx(0.2));
    }
    SECTION("a value on a cut goes to the lower bin") {
        const std::vector<double> s = {0.9, 0.2, 0.4};
        const auto f = bin_fractions(s, 0, t);
        CHECK(f[0] == Catch::Approx(0.5));  // 0.2 sits in bin 1
        CHECK(f[1] == Catch::Approx(0.5));  // 0.4 sits in bin 2
    }
    SECTION("unsorted thresholds are rejected") {
        BinThresholds bad;
        bad.cuts = {0.4, 0.2};
        CHECK_THROWS_AS(bin_fractions({0.1, 0.2, 0.3}, 0, bad), NumericalError);
    }
}

TEST_CASE("loo characteristic mean") {
    CHECK(loo_mean({2.0, 4.0, 6.0}, 0) == Catch::Approx(5.0));
    CHECK(loo_mean({7.0, 7.0, 7.0}, 1) == Catch::Approx(7.0));
}

TEST_CASE("permutation invariance of every statistic") {
    auto rng = make_rng(20);
    std::vector<double> s(12);
    for (auto& v : s) v = draw_uniform(rng);
    BinThresholds t;
    t.cuts = {0.25, 0.5, 0.75};
    const double target = s[3];

    const double m0 = loo_mean(s, 3);
    const double sd0 = loo_sd(s, 3);
    const auto f0 = bin_fractions(s, 3, t);

    std::vector<std::size_t> perm(s.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled(s.size());
    std::size_t new_i = 0;
    for (std::size_t k = 0; k < perm.size(); ++k) {
        shuffled[k] = s[perm[k]];
        if (perm[k] == 3) new_i = k;
    }
    REQUIRE(shuffled[new_i] == target);
    CHECK(loo_mean(shuffled, new_i) == Catch::Approx(m0));
    CHECK(loo_sd(shuffled, new_i) == Catch::Approx(sd0));
    CHECK(bin_fractions(shuffled, new_i, t) == f0);
}

TEST_CASE("raising one peer's score raises everyone else's loo mean") {
    std::vector<double> s = {0.2, 0.4, 0.6, 0.8};
    std::vector<double> bumped = s;
    bumped[2] += 0.1;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == 2) {
            CHECK(loo_mean(bumped, i) == Catch::Approx(loo_mean(s, i)));
        } else {
            CHECK(loo_mean(bumped, i) > loo_mean(s, i));
        }
    }
}

TEST_CASE("mean-preserving spread: loo mean fixed, loo sd strictly larger") {
    // spread peers 1 and 2 around their joint mean, leaving member 0 alone
    const std::vector<double> s = {0.5, 0.6, 0.7, 0.65};
    std::vector<double> spread = s;
    spread[1] -= 0.08;
    spread[2] += 0.08;
    CHECK(loo_mean(spread, 0) == Catch::Approx(loo_mean(s, 0)));
    CHECK(loo_sd(spread, 0) > loo_sd(s, 0));
}

TEST_CASE("quintile thresholds from the pooled distribution") {
    std::vector<double> pooled;
    for (int i = 1; i <= 100; ++i) pooled.push_back(i / 100.0);
    const BinThresholds t = make_thresholds(pooled, 5, "pooled");
    REQUIRE(t.cuts.size() == 4);
    CHECK(t.cuts[0] == Catch::Approx(0.208).margin(0.01));
    CHECK(t.cuts[3] == Catch::Approx(0.802).margin(0.01));
    for (std::size_t i = 1; i < t.cuts.size(); ++i) CHECK(t.cuts[i] > t.cuts[i - 1]);
}
