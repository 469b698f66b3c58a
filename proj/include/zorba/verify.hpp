#pragma once

#include <string>
#include <vector>

namespace zorba::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Criterion 1: the closed-form optimal least popularity matches exhaustive
/// search on every instance with M, N in {2,3,4} and integer budgets in
/// {1..M}.
CheckResult theorem4_exactness();

/// Criterion 2: the greedy never worsens the flow matrix, every emitted
/// matrix is feasible, and the optimality-gap distribution matches the
/// committed golden file.
CheckResult allocator_quality(const std::string& golden_path, bool update_golden = false);

/// Criterion 3: lambda is Schur-convex over transfer-generated majorization
/// pairs, strictly so when the sorted vectors differ.
CheckResult schur_convexity(int pairs = 10000);

/// Criterion 4: the dimension-free bias term increases with lambda wherever
/// the step-size condition holds.
CheckResult bias_monotonicity(int constant_sets = 100);

/// Criterion 5: the estimator's norm inflation matches (d+Q-1)/Q within 15%.
CheckResult norm_inflation();

/// Criterion 6: the smoothed-gradient bias stays within the closed-form
/// bound on a quartic test function.
CheckResult gradient_bias_bound();

/// Criterion 7: 50 heterogeneous-activation rounds keep every client
/// bit-identical to the server, with the exact per-round scalar counts.
CheckResult protocol_exactness();

/// Criterion 8: the uniform-weight baseline and the heterogeneous path with
/// an all-ones matrix produce bit-identical trajectories.
CheckResult decomfl_equivalence();

/// Criterion 9: the optimizer's matrix converges no slower than a
/// same-budget matrix with larger lambda, and first-order beats zeroth-order
/// on the quadratic instance.
CheckResult convergence_ordering();

/// Criterion 10: the emitted front is strictly monotone, contains the
/// full-activation point at tau = 0, and the selected matrix undercuts the
/// all-blocks baseline whenever activation is constrained.
CheckResult pareto_front_shape();

/// Named suites for the CLI: "oracles" (1-4), "estimator" (5-6),
/// "protocol" (7-8), "all" (everything including the convergence studies).
std::vector<CheckResult> run_suite(const std::string& suite, const std::string& golden_path,
                                   bool update_golden = false);

}  // namespace zorba::verify
