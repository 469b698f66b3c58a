#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "zorba/activation.hpp"
#include "zorba/rng.hpp"

using namespace zorba;

TEST_SUITE_BEGIN("activation");

TEST_CASE("popularity on simple matrices") {
    const ActivationMatrix ones = ActivationMatrix::all_ones(3, 3);
    const PopularityProfile p1 = popularity(ones);
    CHECK(p1.block_popularity == std::vector<int>{3, 3, 3});
    CHECK(p1.least_popularity == std::vector<int>{3, 3, 3});

    const ActivationMatrix eye = ActivationMatrix::from_row_strings({"100", "010", "001"});
    const PopularityProfile p2 = popularity(eye);
    CHECK(p2.block_popularity == std::vector<int>{1, 1, 1});
    CHECK(p2.least_popularity == std::vector<int>{1, 1, 1});

    // columns: client1 = (1,1,1), client2 = (1,1,0), client3 = (0,0,1)
    const ActivationMatrix mixed = ActivationMatrix::from_row_strings({"110", "110", "101"});
    const PopularityProfile p3 = popularity(mixed);
    CHECK(p3.block_popularity == std::vector<int>{2, 2, 2});
    CHECK(p3.least_popularity == std::vector<int>{2, 2, 2});
    CHECK(p3.least_popularity_sorted == std::vector<int>{2, 2, 2});
}

TEST_CASE("invalid matrices name the offending index") {
    ActivationMatrix zero_col(2, 2);
    zero_col.set(0, 0, true);
    zero_col.set(1, 0, true);
    CHECK_THROWS_WITH_AS(popularity(zero_col), doctest::Contains("client 1"),
                         std::invalid_argument);

    const ActivationMatrix zero_row = ActivationMatrix::from_row_strings({"11", "00"});
    CHECK_THROWS_WITH_AS(popularity(zero_row), doctest::Contains("block 1"),
                         std::invalid_argument);
}

TEST_CASE("lambda on reference matrices") {
    CHECK(lambda_value(ActivationMatrix::all_ones(3, 3)) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(lambda_value(ActivationMatrix::from_row_strings({"100", "010", "001"})) ==
          doctest::Approx(3.0).epsilon(1e-12));
    CHECK(lambda_from_least_popularity(std::vector<int>{2, 2, 1}) ==
          doctest::Approx(1.5).epsilon(1e-12));

    // three-client worked examples: weight matrices with lambda 11/18 and 11/9
    const ActivationMatrix case2 = ActivationMatrix::from_row_strings({"111", "111", "101"});
    CHECK(lambda_value(case2) == doctest::Approx(11.0 / 18).epsilon(1e-12));
    const ActivationMatrix case5 = ActivationMatrix::from_row_strings({"111", "111", "100"});
    CHECK(lambda_value(case5) == doctest::Approx(11.0 / 9).epsilon(1e-12));
}

TEST_CASE("the two lambda forms agree on random valid matrices") {
    SplitMix64 rng(2024);
    int tested = 0;
    while (tested < 300) {
        const int M = 1 + static_cast<int>(rng.bounded(20));
        const int N = 1 + static_cast<int>(rng.bounded(20));
        ActivationMatrix A(M, N);
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n) A.set(m, n, rng.uniform01() < 0.45);
        try {
            A.validate();
        } catch (const std::invalid_argument&) {
            continue;
        }
        ++tested;
        CHECK(std::abs(lambda_value(A) - lambda_weight_form(A)) <= 1e-12);
    }
}

TEST_CASE("lambda is permutation invariant and bounded") {
    SplitMix64 rng(5150);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 2 + static_cast<int>(rng.bounded(12));
        std::vector<int> least(static_cast<size_t>(n));
        for (int& c : least) c = 1 + static_cast<int>(rng.bounded(static_cast<uint64_t>(n)));
        const double reference = lambda_from_least_popularity(least);
        std::vector<int> shuffled = least;
        for (size_t i = 0; i + 1 < shuffled.size(); ++i) {
            const size_t j = i + rng.bounded(shuffled.size() - i);
            std::swap(shuffled[i], shuffled[j]);
        }
        CHECK(lambda_from_least_popularity(shuffled) == reference);  // exact
    }

    // extremes: all-ones and an assignment-style matrix
    const int N = 7;
    CHECK(lambda_value(ActivationMatrix::all_ones(3, N)) ==
          doctest::Approx(1.0 / N).epsilon(1e-12));
    ActivationMatrix loners(N, N);
    for (int i = 0; i < N; ++i) loners.set(i, i, true);
    CHECK(lambda_value(loners) == doctest::Approx(static_cast<double>(N)).epsilon(1e-12));
}

TEST_CASE("majorization") {
    CHECK(majorizes(std::vector<int>{2, 2, 2}, std::vector<int>{3, 2, 1}));
    CHECK_FALSE(majorizes(std::vector<int>{3, 2, 1}, std::vector<int>{2, 2, 2}));
    CHECK(majorizes(std::vector<int>{2, 2, 1}, std::vector<int>{3, 1, 1}));
    CHECK(majorizes(std::vector<int>{1, 3, 2}, std::vector<int>{3, 2, 1}));  // order-free
    CHECK_FALSE(majorizes(std::vector<int>{2, 2}, std::vector<int>{3, 2}));  // totals differ
    CHECK_THROWS_AS(majorizes(std::vector<int>{1}, std::vector<int>{1, 2}),
                    std::invalid_argument);
}

TEST_CASE("row strings and row vectors parse identically") {
    const ActivationMatrix a = ActivationMatrix::from_row_strings({"101", "011"});
    const ActivationMatrix b = ActivationMatrix::from_rows({{1, 0, 1}, {0, 1, 1}});
    CHECK(a == b);
    CHECK(a.column(0) == std::vector<uint8_t>{1, 0});
    CHECK_THROWS_AS(ActivationMatrix::from_row_strings({"10", "2x"}), std::invalid_argument);
    CHECK_THROWS_AS(ActivationMatrix::from_rows({{1, 0}, {1}}), std::invalid_argument);
}

TEST_SUITE_END();
