#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zorba/activation.hpp"
#include "zorba/vram.hpp"

namespace zorba {

/// A reduction vector yields gamma* = 0: no activation matrix can give every
/// block a single activator within the budgets.
struct InfeasibleEpsilon : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The max-flow construction fell short of the closed-form optimum. With
/// integer budgets this cannot happen; it indicates a bug.
struct InternalInconsistency : std::logic_error {
    using std::logic_error::logic_error;
};

/// One block-assignment instance: per-client block budgets against M blocks.
struct AllocationProblem {
    int blocks = 0;                    // M
    int clients = 0;                   // N
    std::vector<double> budgets_real;  // lambda_n*, as computed from capacities
    std::vector<int> budgets_int;      // floor(lambda_n*), what a client can activate

    static AllocationProblem from_budgets(int blocks, std::vector<double> budgets_real);
    void validate() const;
};

/// Largest least popularity achievable under the budgets:
/// min over b in {1..M} of floor(sum_n min(budget_n, b) / b). The minimum
/// over block subsets depends on a subset only through its cardinality, so
/// the 2^M - 1 subset sweep collapses to M candidates; the full sweep
/// survives in the test oracle. Throws InfeasibleEpsilon when the result
/// is 0.
int optimal_gamma(std::span<const double> budgets, int blocks);

/// Matrix with every block popularity >= gamma_star and every column within
/// its integer budget, built from a Dinic max flow (source -> client with
/// capacity budget_n, client -> block with capacity 1, block -> sink with
/// capacity gamma_star). Clients the flow left empty are given the currently
/// least popular block. Throws InternalInconsistency if the flow is short of
/// blocks * gamma_star.
ActivationMatrix initial_allocation(const AllocationProblem& problem, int gamma_star);

/// One greedy assignment, recorded for replay checks.
struct GreedyStep {
    int block = 0;
    int client = 0;
};

/// Greedy refinement: repeatedly activate the popularity-gamma* block that
/// unblocks the most clients still pinned at gamma*, spending leftover
/// budgets. Tie-breaks are deterministic (lowest block index; recipient with
/// the largest remaining budget, then lowest index) unless a seed is given
/// for the recipient choice.
ActivationMatrix greedy_update(const ActivationMatrix& initial, const AllocationProblem& problem,
                               int gamma_star, std::vector<GreedyStep>* trace = nullptr,
                               std::optional<uint64_t> recipient_seed = std::nullopt);

/// A reduction-ratio draw mapped to per-client reductions.
struct EpsilonSample {
    double tau = 0.0;
    std::vector<double> epsilon;
};

/// Outcome of one solved reduction vector.
struct ParetoPoint {
    EpsilonSample epsilon;
    ActivationMatrix matrix;
    int gamma_star = 0;
    double lambda = 0.0;
    double vram_total = 0.0;
};

/// Per-sample sweep record, including skipped samples.
struct SweepRow {
    double tau = 0.0;
    bool feasible = false;
    bool on_front = false;
    double lambda = 0.0;
    double vram_total = 0.0;
    std::string skip_reason;
};

struct SweepResult {
    std::vector<SweepRow> rows;        // one per sample, in sample order
    std::vector<ParetoPoint> front;    // non-dominated set, ascending VRAM
    int skipped_infeasible = 0;
    int gamma_repaired = 0;            // real-budget gamma* exceeded the integer one
};

struct SweepOptions {
    bool include_tau_zero = true;   // pin the first sample at tau = 0
    bool per_client_tau = false;    // draw an independent tau per client
    int threads = 1;
};

/// Clamp a reduction vector so every client can still afford one block.
EpsilonSample make_epsilon_sample(double tau, const VramProfile& profile,
                                  const ArchConfig& arch);

/// Budgets -> gamma* -> flow matrix -> greedy refinement -> (lambda, VRAM).
/// Returns nothing when the sample is infeasible (the reason is reported).
std::optional<ParetoPoint> solve_for_epsilon(const EpsilonSample& eps,
                                             const VramProfile& profile, const ArchConfig& arch,
                                             std::string* skip_reason = nullptr,
                                             bool* gamma_repaired = nullptr);

/// Draw E reduction ratios, solve each, and keep the non-dominated set in
/// the (total VRAM, lambda) plane, both minimized. Front points are sorted
/// by ascending VRAM, so lambda strictly decreases along it. Throws
/// InfeasibleEpsilon when every sample is skipped.
SweepResult pareto_sweep(const VramProfile& profile, const ArchConfig& arch, int num_samples,
                         uint64_t sweep_seed, const SweepOptions& options = {});

struct SelectionPolicy {
    enum class Kind { MinVramWithinDelta, VramBudget, MinLambda };
    Kind kind = Kind::MinVramWithinDelta;
    double delta = 0.05;  // MinVramWithinDelta: accept lambda <= (1+delta) * min
    double cap = 0.0;     // VramBudget: max admissible total VRAM
};

/// Pick the operating point off the front. Throws std::invalid_argument on
/// an empty front or an unsatisfiable VRAM cap.
const ParetoPoint& select_allocation(const std::vector<ParetoPoint>& front,
                                     const SelectionPolicy& policy);

struct BruteForceResult {
    int gamma_max = 0;       // best achievable min least popularity
    double lambda_min = 0.0; // optimal lambda over all feasible matrices
    ActivationMatrix witness;
};

/// Exhaustive 2^(M*N) enumeration over matrices satisfying the row/column
/// constraints and integer column budgets. Restricted to M*N <= 20.
BruteForceResult brute_force_optimum(int blocks, int clients, std::span<const int> budgets);

}  // namespace zorba
