#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "zorba/bounds.hpp"
#include "zorba/rng.hpp"

using namespace zorba;

TEST_SUITE_BEGIN("bounds");

namespace {
BoundConstants small_constants() {
    BoundConstants k;
    k.d = 100;
    k.N = 3;
    k.Q = 4;
    k.L_smooth = 1.0;
    k.kappa = 8.0;
    k.mu = 1e-4;
    k.sigma = 1.0;
    k.sigma_G = 1.0;
    k.eta = (k.d + 2.0) / (2.0 * k.L_smooth * k.d * k.N * k.N * (k.kappa + 2.0));
    return k;
}
}  // namespace

TEST_CASE("bias vanishes at lambda zero") {
    const BoundConstants k = small_constants();
    CHECK(bias_term_t2(0.0, k) == 0.0);
    BoundConstants k1 = k;
    k1.eta = k.Q / (6.0 * k.L_smooth * (k.d + k.Q - 1.0) * k.N * k.N);
    CHECK(bias_term_t1(0.0, k1) == 0.0);
}

TEST_CASE("bias ordering between balanced and degenerate matrices") {
    const BoundConstants k = small_constants();
    // lambda of all-ones (1/N with N=3) versus an assignment matrix (N)
    CHECK(bias_term_t2(1.0 / 3, k) < bias_term_t2(3.0, k));
}

TEST_CASE("finite-difference slope is positive") {
    const BoundConstants k = small_constants();
    const double h = 1e-6;
    const double slope = (bias_term_t2(1.0 + h, k) - bias_term_t2(1.0 - h, k)) / (2.0 * h);
    CHECK(slope > 0.0);
}

TEST_CASE("step-size precondition is enforced") {
    BoundConstants k = small_constants();
    k.eta *= 1.5;
    CHECK_THROWS_AS(bias_term_t2(1.0, k), std::domain_error);
    BoundConstants bad = small_constants();
    bad.sigma = -1.0;
    CHECK_THROWS_AS(bias_term_t2(1.0, bad), std::invalid_argument);
}

TEST_CASE("standard bound mirrors the dimension-free one") {
    BoundConstants k = small_constants();
    k.eta = k.Q / (6.0 * k.L_smooth * (k.d + k.Q - 1.0) * k.N * k.N);
    const double low = bias_term_t1(0.5, k);
    const double high = bias_term_t1(2.5, k);
    CHECK(low > 0.0);
    CHECK(low < high);
    BoundConstants violating = k;
    violating.eta *= 2.0;
    CHECK_THROWS_AS(bias_term_t1(1.0, violating), std::domain_error);
}

TEST_CASE("margins stay positive across the feasible range") {
    SplitMix64 rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        BoundConstants k = small_constants();
        k.d = 8.0 + std::floor(rng.uniform01() * 1000.0);
        k.N = 2.0 + std::floor(rng.uniform01() * 20.0);
        k.kappa = 1.0 + rng.uniform01() * 30.0;
        k.eta = (0.1 + 0.9 * rng.uniform01()) * (k.d + 2.0) /
                (2.0 * k.L_smooth * k.d * k.N * k.N * (k.kappa + 2.0));
        for (double frac : {0.1, 0.5, 1.0}) CHECK(phi_t2(frac * k.N, k) > 0.0);
    }
}

TEST_SUITE_END();
