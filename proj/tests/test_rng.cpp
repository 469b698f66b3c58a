#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstring>
#include <set>

#include "zorba/rng.hpp"

using namespace zorba;

TEST_SUITE_BEGIN("rng");

TEST_CASE("layout offsets partition the dimension") {
    BlockLayout layout({3, 5, 2});
    CHECK(layout.d == 10);
    CHECK(layout.offsets == std::vector<int64_t>{0, 3, 8});
    CHECK_THROWS_AS(BlockLayout(std::vector<int64_t>{}), std::invalid_argument);
    CHECK_THROWS_AS(BlockLayout({4, 0}), std::invalid_argument);
}

TEST_CASE("unit-sphere perturbations have unit norm") {
    BlockLayout layout({2, 2});
    for (uint64_t seed : {0ULL, 7ULL, 12345ULL, ~0ULL}) {
        const PerturbationVector v =
            generate_perturbation(seed, layout, PerturbationMode::UnitSphere);
        double norm_sq = 0.0;
        for (double x : v.values) norm_sq += x * x;
        CHECK(std::abs(std::sqrt(norm_sq) - 1.0) <= 1e-9);
    }
}

TEST_CASE("same seed reproduces bit-identical vectors") {
    BlockLayout layout({16, 16, 32});
    for (PerturbationMode mode : {PerturbationMode::UnitSphere, PerturbationMode::RawGaussian}) {
        const PerturbationVector a = generate_perturbation(42, layout, mode);
        const PerturbationVector b = generate_perturbation(42, layout, mode);
        REQUIRE(a.values.size() == b.values.size());
        CHECK(std::memcmp(a.values.data(), b.values.data(),
                          a.values.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("raw gaussian draws have standard moments") {
    // Monte-Carlo pin of the generator: per-coordinate mean and variance
    // over 1e5 seeds.
    BlockLayout layout({2, 2});
    const int seeds = 100000;
    std::vector<double> mean(4, 0.0), second(4, 0.0);
    for (int s = 0; s < seeds; ++s) {
        const PerturbationVector v = generate_perturbation(
            static_cast<uint64_t>(s) + 1, layout, PerturbationMode::RawGaussian);
        for (int i = 0; i < 4; ++i) {
            mean[static_cast<size_t>(i)] += v.values[static_cast<size_t>(i)];
            second[static_cast<size_t>(i)] +=
                v.values[static_cast<size_t>(i)] * v.values[static_cast<size_t>(i)];
        }
    }
    for (int i = 0; i < 4; ++i) {
        const double m = mean[static_cast<size_t>(i)] / seeds;
        const double var = second[static_cast<size_t>(i)] / seeds - m * m;
        CHECK(std::abs(m) < 0.02);
        CHECK(std::abs(var - 1.0) < 0.05);
    }
}

TEST_CASE("round seed selection draws distinct deterministic subsets") {
    const SeedPool pool = SeedPool::derive(99, 4096);
    REQUIRE(pool.seeds.size() == 4096);
    const std::vector<uint64_t> first = select_round_seeds(pool, 1, 10);
    CHECK(first.size() == 10);
    CHECK(std::set<uint64_t>(first.begin(), first.end()).size() == 10);
    for (uint64_t s : first)
        CHECK(std::find(pool.seeds.begin(), pool.seeds.end(), s) != pool.seeds.end());
    CHECK(select_round_seeds(pool, 1, 10) == first);
    CHECK(select_round_seeds(pool, 2, 10) != first);
}

TEST_CASE("single-seed pool and bad Q") {
    SeedPool pool;
    pool.master_seed = 5;
    pool.seeds = {1234};
    CHECK(select_round_seeds(pool, 3, 1) == std::vector<uint64_t>{1234});
    pool.seeds = {1, 2, 3, 4, 5};
    CHECK_THROWS_AS(select_round_seeds(pool, 1, 6), std::invalid_argument);
    CHECK_THROWS_AS(select_round_seeds(pool, 1, 0), std::invalid_argument);
}

TEST_CASE("block slices partition the vector") {
    BlockLayout layout({2, 2});
    PerturbationVector v;
    v.values = {1.0, 2.0, 3.0, 4.0};
    const std::span<const double> slice = block_slice(v, layout, 1);
    CHECK(slice[0] == 3.0);
    CHECK(slice[1] == 4.0);
    CHECK_THROWS_AS(block_slice(v, layout, 2), std::out_of_range);
    CHECK_THROWS_AS(block_slice(v, layout, -1), std::out_of_range);

    BlockLayout whole({4});
    const std::span<const double> all = block_slice(v, whole, 0);
    CHECK(all.size() == 4);

    // concatenating slices of a random 5-block layout reproduces the vector
    BlockLayout five({3, 1, 4, 2, 6});
    const PerturbationVector r =
        generate_perturbation(77, five, PerturbationMode::RawGaussian);
    std::vector<double> rebuilt;
    for (int m = 0; m < five.num_blocks(); ++m) {
        const std::span<const double> s = block_slice(r, five, m);
        rebuilt.insert(rebuilt.end(), s.begin(), s.end());
    }
    CHECK(rebuilt == r.values);
}

TEST_SUITE_END();
