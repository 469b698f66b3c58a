#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "zorba/allocator.hpp"
#include "zorba/rng.hpp"

using namespace zorba;

TEST_SUITE_BEGIN("allocator");

namespace {
AllocationProblem problem_of(int blocks, std::vector<double> budgets) {
    return AllocationProblem::from_budgets(blocks, std::move(budgets));
}
}  // namespace

TEST_CASE("closed-form optimal least popularity") {
    CHECK(optimal_gamma(std::vector<double>{1, 1, 1}, 3) == 1);
    CHECK(optimal_gamma(std::vector<double>{3, 3, 3}, 3) == 3);
    CHECK(optimal_gamma(std::vector<double>{1, 2, 3}, 3) == 2);
    // per-cardinality values for [1,2,3]: b=1 -> 3, b=2 -> 2, b=3 -> 2
    CHECK_THROWS_AS(optimal_gamma(std::vector<double>{1, 1}, 4), InfeasibleEpsilon);
}

TEST_CASE("closed form matches the exhaustive oracle on small instances") {
    SplitMix64 rng(808);
    for (int rep = 0; rep < 60; ++rep) {
        const int M = 2 + static_cast<int>(rng.bounded(3));
        const int N = 2 + static_cast<int>(rng.bounded(3));
        std::vector<int> budgets(static_cast<size_t>(N));
        for (int& b : budgets) b = 1 + static_cast<int>(rng.bounded(static_cast<uint64_t>(M)));
        BruteForceResult oracle;
        bool oracle_feasible = true;
        try {
            oracle = brute_force_optimum(M, N, budgets);
        } catch (const InfeasibleEpsilon&) {
            oracle_feasible = false;
        }
        bool closed_feasible = true;
        int gamma = 0;
        try {
            gamma = optimal_gamma(std::vector<double>(budgets.begin(), budgets.end()), M);
        } catch (const InfeasibleEpsilon&) {
            closed_feasible = false;
        }
        REQUIRE(closed_feasible == oracle_feasible);
        if (oracle_feasible) CHECK(gamma == oracle.gamma_max);
    }
}

TEST_CASE("flow construction meets the optimum") {
    SUBCASE("full budgets give the all-ones matrix") {
        const AllocationProblem p = problem_of(3, {3, 3, 3});
        const ActivationMatrix A = initial_allocation(p, 3);
        CHECK(A == ActivationMatrix::all_ones(3, 3));
    }
    SUBCASE("unit budgets give an assignment") {
        const AllocationProblem p = problem_of(3, {1, 1, 1});
        const ActivationMatrix A = initial_allocation(p, 1);
        const PopularityProfile pop = popularity(A);
        CHECK(pop.block_popularity == std::vector<int>{1, 1, 1});
        for (int n = 0; n < 3; ++n) CHECK(A.col_sum(n) == 1);
    }
    SUBCASE("mixed budgets cover every block twice") {
        const AllocationProblem p = problem_of(3, {1, 2, 3});
        const ActivationMatrix A = initial_allocation(p, 2);
        const PopularityProfile pop = popularity(A);
        for (int m = 0; m < 3; ++m) CHECK(pop.block_popularity[static_cast<size_t>(m)] >= 2);
        CHECK(A.col_sum(0) <= 1);
        CHECK(A.col_sum(1) <= 2);
        CHECK(A.col_sum(2) <= 3);
    }
    SUBCASE("every client ends with at least one block") {
        // gamma 1 with one big client: the flow may starve the others, the
        // repair pass must not.
        const AllocationProblem p = problem_of(3, {3, 3, 3});
        const ActivationMatrix A = initial_allocation(p, 1);
        for (int n = 0; n < 3; ++n) CHECK(A.col_sum(n) >= 1);
        const PopularityProfile pop = popularity(A);
        for (int m = 0; m < 3; ++m) CHECK(pop.block_popularity[static_cast<size_t>(m)] >= 1);
    }
}

TEST_CASE("greedy refinement follows the published trace") {
    // Identity start, budgets floor to [2,2,1], gamma* = 1: block 0 goes to
    // client 1, block 1 goes to client 0, then budgets are exhausted.
    const AllocationProblem p = problem_of(3, {2, 2, 1});
    const ActivationMatrix eye = ActivationMatrix::from_row_strings({"100", "010", "001"});
    std::vector<GreedyStep> trace;
    const ActivationMatrix refined = greedy_update(eye, p, 1, &trace);

    REQUIRE(trace.size() == 2);
    CHECK(trace[0].block == 0);
    CHECK(trace[0].client == 1);
    CHECK(trace[1].block == 1);
    CHECK(trace[1].client == 0);

    const PopularityProfile pop = popularity(refined);
    CHECK(pop.least_popularity == std::vector<int>{2, 2, 1});
    CHECK(lambda_value(refined) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(lambda_value(eye) == doctest::Approx(3.0).epsilon(1e-12));

    // replay: applying the trace to the initial matrix reproduces the output
    ActivationMatrix replayed = eye;
    for (const GreedyStep& step : trace) replayed.set(step.block, step.client, true);
    CHECK(replayed == refined);
}

TEST_CASE("greedy no-ops") {
    SUBCASE("all-ones leaves no candidates") {
        const AllocationProblem p = problem_of(3, {3, 3, 3});
        const ActivationMatrix ones = ActivationMatrix::all_ones(3, 3);
        CHECK(greedy_update(ones, p, 3) == ones);
    }
    SUBCASE("exhausted budgets") {
        const AllocationProblem p = problem_of(3, {1, 1, 1});
        const ActivationMatrix eye = ActivationMatrix::from_row_strings({"100", "010", "001"});
        CHECK(greedy_update(eye, p, 1) == eye);
    }
}

TEST_CASE("greedy never raises lambda on pipeline matrices") {
    SplitMix64 rng(4242);
    for (int rep = 0; rep < 120; ++rep) {
        const int M = 2 + static_cast<int>(rng.bounded(5));
        const int N = 2 + static_cast<int>(rng.bounded(5));
        std::vector<double> budgets(static_cast<size_t>(N));
        for (double& b : budgets)
            b = 1.0 + rng.uniform01() * static_cast<double>(M);
        int gamma;
        try {
            std::vector<double> floored(budgets.size());
            for (size_t i = 0; i < budgets.size(); ++i) floored[i] = std::floor(budgets[i]);
            gamma = optimal_gamma(floored, M);
        } catch (const InfeasibleEpsilon&) {
            continue;
        }
        const AllocationProblem p = problem_of(M, budgets);
        const ActivationMatrix initial = initial_allocation(p, gamma);
        const ActivationMatrix refined = greedy_update(initial, p, gamma);
        CHECK(lambda_value(refined) <= lambda_value(initial));
        refined.validate();
        for (int n = 0; n < N; ++n)
            CHECK(refined.col_sum(n) <= p.budgets_int[static_cast<size_t>(n)]);
    }
}

TEST_CASE("seeded recipient choice stays within the eligible set") {
    const AllocationProblem p = problem_of(3, {2, 2, 1});
    const ActivationMatrix eye = ActivationMatrix::from_row_strings({"100", "010", "001"});
    const ActivationMatrix refined = greedy_update(eye, p, 1, nullptr, 99ULL);
    refined.validate();
    for (int n = 0; n < 3; ++n) CHECK(refined.col_sum(n) <= p.budgets_int[static_cast<size_t>(n)]);
    CHECK(lambda_value(refined) <= lambda_value(eye));
    // deterministic given the seed
    CHECK(greedy_update(eye, p, 1, nullptr, 99ULL) == refined);
}

TEST_CASE("brute force on reference instances") {
    const BruteForceResult unit = brute_force_optimum(3, 3, std::vector<int>{1, 1, 1});
    CHECK(unit.gamma_max == 1);
    CHECK(unit.lambda_min == doctest::Approx(3.0).epsilon(1e-12));

    const BruteForceResult full = brute_force_optimum(2, 2, std::vector<int>{2, 2});
    CHECK(full.gamma_max == 2);
    CHECK(full.lambda_min == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(full.witness == ActivationMatrix::all_ones(2, 2));

    CHECK(brute_force_optimum(3, 3, std::vector<int>{1, 2, 3}).gamma_max == 2);
    CHECK_THROWS_AS(brute_force_optimum(5, 5, std::vector<int>{5, 5, 5, 5, 5}),
                    std::invalid_argument);
}

TEST_CASE("epsilon samples clamp to affordable reductions") {
    ArchConfig arch;
    arch.batch_size = 1;
    arch.seq_len = 1;
    arch.hidden = 1;
    arch.heads = 2;
    arch.ffn_ratio = 43;  // block cost 50
    arch.blocks = 2;
    VramProfile profile;
    profile.psi_md = 400.0;
    profile.psi_max = {1000.0, 460.0};

    const EpsilonSample zero = make_epsilon_sample(0.0, profile, arch);
    CHECK(zero.epsilon == std::vector<double>{0.0, 0.0});

    const EpsilonSample one = make_epsilon_sample(1.0, profile, arch);
    CHECK(one.epsilon[0] == doctest::Approx(550.0));  // 1000 - 400 - 50
    CHECK(one.epsilon[1] == doctest::Approx(10.0));   // 460 - 400 - 50

    std::string reason;
    const auto point = solve_for_epsilon(one, profile, arch, &reason);
    REQUIRE(point.has_value());
    // every client clamped to exactly one block
    CHECK(point->matrix.col_sum(0) == 1);
    CHECK(point->matrix.col_sum(1) == 1);
    CHECK(point->gamma_star == 1);
}

TEST_CASE("solve composes budgets, gamma, flow, and greedy") {
    ArchConfig arch;
    arch.batch_size = 1;
    arch.seq_len = 1;
    arch.hidden = 1;
    arch.heads = 2;
    arch.ffn_ratio = 43;  // block cost 50
    arch.blocks = 3;
    VramProfile profile;
    profile.psi_md = 100.0;
    profile.psi_max = {250.0, 250.0, 250.0};  // three blocks each at eps 0

    const EpsilonSample zero = make_epsilon_sample(0.0, profile, arch);
    const auto full = solve_for_epsilon(zero, profile, arch);
    REQUIRE(full.has_value());
    CHECK(full->matrix == ActivationMatrix::all_ones(3, 3));
    CHECK(full->lambda == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(full->vram_total == doctest::Approx(3 * 250.0));

    // budgets forced to one block each: an assignment matrix
    const EpsilonSample tight = make_epsilon_sample(1.0, profile, arch);
    const auto assignment = solve_for_epsilon(tight, profile, arch);
    REQUIRE(assignment.has_value());
    CHECK(assignment->gamma_star == 1);
    for (int n = 0; n < 3; ++n) CHECK(assignment->matrix.col_sum(n) == 1);
    const BruteForceResult oracle = brute_force_optimum(3, 3, std::vector<int>{1, 1, 1});
    CHECK(assignment->lambda == doctest::Approx(oracle.lambda_min).epsilon(1e-12));
}

TEST_CASE("fractional budgets fall back to the achievable gamma") {
    // Real-valued budgets [1.5, 1.5, 1.5] with two blocks: the closed form
    // on the reals promises 2, but only 3 integral activations exist.
    ArchConfig arch;
    arch.batch_size = 1;
    arch.seq_len = 1;
    arch.hidden = 1;
    arch.heads = 2;
    arch.ffn_ratio = 43;  // block cost 50
    arch.blocks = 2;
    VramProfile profile;
    profile.psi_md = 0.0;
    profile.psi_max = {75.0, 75.0, 75.0};

    const EpsilonSample zero = make_epsilon_sample(0.0, profile, arch);
    bool repaired = false;
    const auto point = solve_for_epsilon(zero, profile, arch, nullptr, &repaired);
    REQUIRE(point.has_value());
    CHECK(repaired);
    CHECK(point->gamma_star == 1);
    point->matrix.validate();
}

TEST_CASE("pareto sweep yields a strictly monotone front") {
    ArchConfig arch;
    arch.batch_size = 1;
    arch.seq_len = 4;
    arch.hidden = 8;
    arch.heads = 2;
    arch.ffn_ratio = 4;  // block cost 352
    arch.blocks = 6;
    VramProfile profile;
    profile.psi_md = 5000.0;
    const double block = block_activation_cost(arch);
    SplitMix64 rng(3);
    for (int n = 0; n < 12; ++n)
        profile.psi_max.push_back(profile.psi_md + (1.0 + 5.0 * rng.uniform01()) * block);

    const SweepResult sweep = pareto_sweep(profile, arch, 64, 1234);
    CHECK(sweep.rows.size() == 64);
    REQUIRE(!sweep.front.empty());
    for (size_t i = 1; i < sweep.front.size(); ++i) {
        CHECK(sweep.front[i].vram_total > sweep.front[i - 1].vram_total);
        CHECK(sweep.front[i].lambda < sweep.front[i - 1].lambda);
    }
    // sample rows flag exactly the front points
    int flagged = 0;
    for (const SweepRow& row : sweep.rows) flagged += row.on_front ? 1 : 0;
    CHECK(flagged == static_cast<int>(sweep.front.size()));

    // single-sample sweep: tau = 0 pinned first
    const SweepResult single = pareto_sweep(profile, arch, 1, 1234);
    REQUIRE(single.front.size() == 1);
    CHECK(single.rows[0].tau == 0.0);

    // a multithreaded sweep returns identical results
    SweepOptions threaded;
    threaded.threads = 4;
    const SweepResult parallel = pareto_sweep(profile, arch, 64, 1234, threaded);
    REQUIRE(parallel.front.size() == sweep.front.size());
    for (size_t i = 0; i < parallel.front.size(); ++i) {
        CHECK(parallel.front[i].lambda == sweep.front[i].lambda);
        CHECK(parallel.front[i].vram_total == sweep.front[i].vram_total);
        CHECK(parallel.front[i].matrix == sweep.front[i].matrix);
    }
}

TEST_CASE("selection policies") {
    auto point = [](double vram, double lambda) {
        ParetoPoint p;
        p.vram_total = vram;
        p.lambda = lambda;
        p.matrix = ActivationMatrix::all_ones(1, 1);
        return p;
    };
    const std::vector<ParetoPoint> front = {point(100, 1.00), point(120, 0.52),
                                            point(200, 0.50)};

    SelectionPolicy min_lambda;
    min_lambda.kind = SelectionPolicy::Kind::MinLambda;
    CHECK(select_allocation(front, min_lambda).vram_total == 200);

    SelectionPolicy knee;  // default: cheapest within 5% of the best lambda
    CHECK(select_allocation(front, knee).vram_total == 120);

    SelectionPolicy budget;
    budget.kind = SelectionPolicy::Kind::VramBudget;
    budget.cap = 150;
    CHECK(select_allocation(front, budget).vram_total == 120);
    budget.cap = 50;
    CHECK_THROWS_AS(select_allocation(front, budget), std::invalid_argument);

    const std::vector<ParetoPoint> singleton = {point(77, 0.9)};
    CHECK(select_allocation(singleton, min_lambda).vram_total == 77);
    CHECK(select_allocation(singleton, knee).vram_total == 77);
    CHECK_THROWS_AS(select_allocation({}, knee), std::invalid_argument);
}

TEST_SUITE_END();
