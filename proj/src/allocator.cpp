#include "zorba/allocator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <queue>
#include <set>

#include "zorba/rng.hpp"

namespace zorba {

namespace {

// Dinic max flow on a small dense-ish network. Unit and small integer
// capacities only, so the classic level-graph + blocking-flow form is ample.
class Dinic {
public:
    explicit Dinic(int nodes) : graph_(static_cast<size_t>(nodes)) {}

    void add_edge(int from, int to, int cap) {
        graph_[static_cast<size_t>(from)].push_back(
            {to, cap, static_cast<int>(graph_[static_cast<size_t>(to)].size())});
        graph_[static_cast<size_t>(to)].push_back(
            {from, 0, static_cast<int>(graph_[static_cast<size_t>(from)].size()) - 1});
    }

    int max_flow(int source, int sink) {
        int flow = 0;
        while (build_levels(source, sink)) {
            iter_.assign(graph_.size(), 0);
            while (int pushed = augment(source, sink, std::numeric_limits<int>::max()))
                flow += pushed;
        }
        return flow;
    }

    struct Edge {
        int to;
        int cap;
        int rev;
    };

    const std::vector<Edge>& edges_from(int node) const {
        return graph_[static_cast<size_t>(node)];
    }

private:
    bool build_levels(int source, int sink) {
        level_.assign(graph_.size(), -1);
        std::queue<int> queue;
        level_[static_cast<size_t>(source)] = 0;
        queue.push(source);
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop();
            for (const Edge& e : graph_[static_cast<size_t>(u)]) {
                if (e.cap > 0 && level_[static_cast<size_t>(e.to)] < 0) {
                    level_[static_cast<size_t>(e.to)] = level_[static_cast<size_t>(u)] + 1;
                    queue.push(e.to);
                }
            }
        }
        return level_[static_cast<size_t>(sink)] >= 0;
    }

    int augment(int u, int sink, int limit) {
        if (u == sink) return limit;
        for (size_t& i = iter_[static_cast<size_t>(u)]; i < graph_[static_cast<size_t>(u)].size();
             ++i) {
            Edge& e = graph_[static_cast<size_t>(u)][i];
            if (e.cap > 0 &&
                level_[static_cast<size_t>(e.to)] == level_[static_cast<size_t>(u)] + 1) {
                const int pushed = augment(e.to, sink, std::min(limit, e.cap));
                if (pushed > 0) {
                    e.cap -= pushed;
                    graph_[static_cast<size_t>(e.to)][static_cast<size_t>(e.rev)].cap += pushed;
                    return pushed;
                }
            }
        }
        return 0;
    }

    std::vector<std::vector<Edge>> graph_;
    std::vector<int> level_;
    std::vector<size_t> iter_;
};

}  // namespace

AllocationProblem AllocationProblem::from_budgets(int blocks, std::vector<double> budgets_real) {
    AllocationProblem p;
    p.blocks = blocks;
    p.clients = static_cast<int>(budgets_real.size());
    p.budgets_real = std::move(budgets_real);
    p.budgets_int.reserve(p.budgets_real.size());
    for (double b : p.budgets_real) {
        const int floored = static_cast<int>(std::floor(b));
        p.budgets_int.push_back(std::clamp(floored, 0, blocks));
    }
    return p;
}

void AllocationProblem::validate() const {
    if (blocks < 1 || clients < 1)
        throw std::invalid_argument("AllocationProblem: empty instance");
    if (static_cast<int>(budgets_real.size()) != clients ||
        static_cast<int>(budgets_int.size()) != clients)
        throw std::invalid_argument("AllocationProblem: budget vector size mismatch");
    for (int n = 0; n < clients; ++n) {
        if (budgets_int[static_cast<size_t>(n)] < 1)
            throw std::invalid_argument("AllocationProblem: client " + std::to_string(n) +
                                        " cannot activate any block");
        if (budgets_int[static_cast<size_t>(n)] > blocks)
            throw std::invalid_argument("AllocationProblem: client " + std::to_string(n) +
                                        " budget exceeds block count");
    }
}

int optimal_gamma(std::span<const double> budgets, int blocks) {
    if (blocks < 1 || budgets.empty())
        throw std::invalid_argument("optimal_gamma: empty instance");
    int best = std::numeric_limits<int>::max();
    for (int b = 1; b <= blocks; ++b) {
        double supply = 0.0;
        for (double lambda : budgets) supply += std::min(lambda, static_cast<double>(b));
        best = std::min(best, static_cast<int>(std::floor(supply / static_cast<double>(b))));
    }
    if (best < 1)
        throw InfeasibleEpsilon("optimal_gamma: budgets cannot cover every block");
    return best;
}

ActivationMatrix initial_allocation(const AllocationProblem& problem, int gamma_star) {
    problem.validate();
    if (gamma_star < 1) throw std::invalid_argument("initial_allocation: gamma_star < 1");
    const int M = problem.blocks;
    const int N = problem.clients;

    // source = 0, clients = 1..N, blocks = N+1..N+M, sink = N+M+1
    const int source = 0;
    const int sink = N + M + 1;
    Dinic net(N + M + 2);
    for (int n = 0; n < N; ++n)
        net.add_edge(source, 1 + n, problem.budgets_int[static_cast<size_t>(n)]);
    for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) net.add_edge(1 + n, 1 + N + m, 1);
    for (int m = 0; m < M; ++m) net.add_edge(1 + N + m, sink, gamma_star);

    const int flow = net.max_flow(source, sink);
    if (flow < M * gamma_star)
        throw InternalInconsistency("initial_allocation: max flow " + std::to_string(flow) +
                                    " short of " + std::to_string(M * gamma_star));

    ActivationMatrix matrix(M, N);
    for (int n = 0; n < N; ++n) {
        for (const Dinic::Edge& e : net.edges_from(1 + n)) {
            if (e.to >= 1 + N && e.to < 1 + N + M && e.cap == 0)
                matrix.set(e.to - 1 - N, n, true);
        }
    }

    // Clients the flow skipped still must activate one block; give each the
    // currently least popular one (lowest index on ties). Popularities only
    // grow, so every block keeps popularity >= gamma_star.
    std::vector<int> pops(static_cast<size_t>(M));
    for (int m = 0; m < M; ++m) pops[static_cast<size_t>(m)] = matrix.row_sum(m);
    for (int n = 0; n < N; ++n) {
        if (matrix.col_sum(n) > 0) continue;
        int target = 0;
        for (int m = 1; m < M; ++m)
            if (pops[static_cast<size_t>(m)] < pops[static_cast<size_t>(target)]) target = m;
        matrix.set(target, n, true);
        pops[static_cast<size_t>(target)] += 1;
    }
    return matrix;
}

ActivationMatrix greedy_update(const ActivationMatrix& initial, const AllocationProblem& problem,
                               int gamma_star, std::vector<GreedyStep>* trace,
                               std::optional<uint64_t> recipient_seed) {
    problem.validate();
    const int M = problem.blocks;
    const int N = problem.clients;
    if (initial.blocks() != M || initial.clients() != N)
        throw std::invalid_argument("greedy_update: matrix shape mismatch");

    const PopularityProfile initial_pop = popularity(initial);

    // Working sets over the *initial* matrix, maintained exactly as the
    // update loop mutates them; least popularities above gamma_star are not
    // retracked mid-loop.
    std::set<int> low_blocks;  // L: popularity still gamma_star
    for (int m = 0; m < M; ++m)
        if (initial_pop.block_popularity[static_cast<size_t>(m)] == gamma_star)
            low_blocks.insert(m);
    std::set<int> pinned_clients;  // F: least popularity still gamma_star
    std::vector<std::set<int>> bottleneck(static_cast<size_t>(N));  // W_n
    for (int n = 0; n < N; ++n) {
        if (initial_pop.least_popularity[static_cast<size_t>(n)] == gamma_star)
            pinned_clients.insert(n);
        for (int m : low_blocks)
            if (initial.at(m, n)) bottleneck[static_cast<size_t>(n)].insert(m);
    }
    std::vector<int> remaining(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n)
        remaining[static_cast<size_t>(n)] =
            problem.budgets_int[static_cast<size_t>(n)] - initial.col_sum(n);

    ActivationMatrix result = initial;
    std::optional<SplitMix64> rng;
    if (recipient_seed) rng.emplace(*recipient_seed);

    auto total_remaining = [&]() {
        return std::accumulate(remaining.begin(), remaining.end(), 0);
    };

    while (!low_blocks.empty() && !pinned_clients.empty() && total_remaining() > 0) {
        // Candidates: low blocks some budgeted client has not activated yet.
        std::vector<int> candidates;
        for (int m : low_blocks) {
            for (int n = 0; n < N; ++n) {
                if (!initial.at(m, n) && remaining[static_cast<size_t>(n)] > 0) {
                    candidates.push_back(m);
                    break;
                }
            }
        }
        if (candidates.empty()) break;

        int best_block = -1;
        int best_gain = -1;
        for (int m : candidates) {
            int gain = 0;
            for (int n : pinned_clients)
                if (bottleneck[static_cast<size_t>(n)].count(m)) ++gain;
            if (gain > best_gain) {
                best_gain = gain;
                best_block = m;
            }
        }

        std::vector<int> recipients;
        for (int n = 0; n < N; ++n)
            if (remaining[static_cast<size_t>(n)] > 0 && !initial.at(best_block, n))
                recipients.push_back(n);
        int recipient;
        if (rng) {
            recipient = recipients[static_cast<size_t>(
                rng->bounded(static_cast<uint64_t>(recipients.size())))];
        } else {
            recipient = recipients.front();
            for (int n : recipients)
                if (remaining[static_cast<size_t>(n)] >
                    remaining[static_cast<size_t>(recipient)])
                    recipient = n;
        }

        result.set(best_block, recipient, true);
        remaining[static_cast<size_t>(recipient)] -= 1;
        if (trace) trace->push_back({best_block, recipient});

        low_blocks.erase(best_block);
        for (int n = 0; n < N; ++n) {
            if (!initial.at(best_block, n)) continue;
            bottleneck[static_cast<size_t>(n)].erase(best_block);
            if (bottleneck[static_cast<size_t>(n)].empty()) pinned_clients.erase(n);
        }
    }
    return result;
}

EpsilonSample make_epsilon_sample(double tau, const VramProfile& profile,
                                  const ArchConfig& arch) {
    EpsilonSample sample;
    sample.tau = tau;
    const double block = block_activation_cost(arch);
    sample.epsilon.reserve(profile.psi_max.size());
    for (double cap : profile.psi_max) {
        const double upper = cap - profile.psi_md - block;
        sample.epsilon.push_back(std::clamp(tau * cap, 0.0, std::max(0.0, upper)));
    }
    return sample;
}

std::optional<ParetoPoint> solve_for_epsilon(const EpsilonSample& eps,
                                             const VramProfile& profile, const ArchConfig& arch,
                                             std::string* skip_reason, bool* gamma_repaired) {
    const int N = profile.num_clients();
    const int M = arch.blocks;
    std::vector<double> budgets;
    budgets.reserve(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        const BudgetResult r = activation_budget(profile.psi_max[static_cast<size_t>(n)],
                                                 profile.psi_md,
                                                 eps.epsilon[static_cast<size_t>(n)], arch);
        if (!r.feasible || r.value < 1.0) {
            if (skip_reason)
                *skip_reason = "client " + std::to_string(n) + " cannot afford one block";
            return std::nullopt;
        }
        budgets.push_back(r.value);
    }

    AllocationProblem problem = AllocationProblem::from_budgets(M, budgets);
    int gamma;
    try {
        const int gamma_real = optimal_gamma(problem.budgets_real, M);
        std::vector<double> floored(problem.budgets_int.begin(), problem.budgets_int.end());
        gamma = optimal_gamma(floored, M);
        // The closed form evaluated on fractional budgets can promise more
        // than integral activations deliver; the floored value is what the
        // flow construction can realize.
        if (gamma_real != gamma && gamma_repaired) *gamma_repaired = true;
    } catch (const InfeasibleEpsilon&) {
        if (skip_reason) *skip_reason = "gamma* = 0, budgets cannot cover every block";
        return std::nullopt;
    }

    ParetoPoint point;
    point.epsilon = eps;
    point.gamma_star = gamma;
    point.matrix = greedy_update(initial_allocation(problem, gamma), problem, gamma);
    point.lambda = lambda_value(point.matrix);
    point.vram_total = 0.0;
    for (int n = 0; n < N; ++n) {
        const std::vector<uint8_t> column = point.matrix.column(n);
        point.vram_total += total_usage(column, arch, profile.psi_md);
    }
    return point;
}

SweepResult pareto_sweep(const VramProfile& profile, const ArchConfig& arch, int num_samples,
                         uint64_t sweep_seed, const SweepOptions& options) {
    if (num_samples < 1) throw std::invalid_argument("pareto_sweep: need >= 1 sample");
    profile.validate(arch);
    const int N = profile.num_clients();

    // Draw every tau up front so multithreaded solving cannot change them.
    SplitMix64 rng(SplitMix64::hash(sweep_seed, 0x7a0ULL));
    std::vector<EpsilonSample> samples;
    samples.reserve(static_cast<size_t>(num_samples));
    for (int i = 0; i < num_samples; ++i) {
        if (options.per_client_tau) {
            EpsilonSample sample;
            double sum = 0.0;
            sample.epsilon.reserve(static_cast<size_t>(N));
            for (int n = 0; n < N; ++n) {
                const double tau_n = (i == 0 && options.include_tau_zero) ? 0.0 : rng.uniform01();
                sum += tau_n;
                const EpsilonSample one = make_epsilon_sample(tau_n, profile, arch);
                sample.epsilon.push_back(one.epsilon[static_cast<size_t>(n)]);
            }
            sample.tau = sum / static_cast<double>(N);
            samples.push_back(std::move(sample));
        } else {
            const double tau = (i == 0 && options.include_tau_zero) ? 0.0 : rng.uniform01();
            samples.push_back(make_epsilon_sample(tau, profile, arch));
        }
    }

    struct Outcome {
        std::optional<ParetoPoint> point;
        std::string skip_reason;
        bool repaired = false;
    };
    std::vector<Outcome> outcomes(samples.size());
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        for (size_t i = 0; i < samples.size(); ++i)
            outcomes[i].point = solve_for_epsilon(samples[i], profile, arch,
                                                  &outcomes[i].skip_reason,
                                                  &outcomes[i].repaired);
    } else {
        std::vector<std::future<void>> futures;
        futures.reserve(static_cast<size_t>(threads));
        std::atomic<size_t> cursor{0};
        for (int t = 0; t < threads; ++t) {
            futures.push_back(std::async(std::launch::async, [&]() {
                for (;;) {
                    const size_t i = cursor.fetch_add(1);
                    if (i >= samples.size()) return;
                    outcomes[i].point = solve_for_epsilon(samples[i], profile, arch,
                                                          &outcomes[i].skip_reason,
                                                          &outcomes[i].repaired);
                }
            }));
        }
        for (auto& f : futures) f.get();
    }

    SweepResult result;
    result.rows.reserve(samples.size());
    std::vector<std::pair<size_t, const ParetoPoint*>> feasible;
    for (size_t i = 0; i < samples.size(); ++i) {
        SweepRow row;
        row.tau = samples[i].tau;
        if (outcomes[i].point) {
            row.feasible = true;
            row.lambda = outcomes[i].point->lambda;
            row.vram_total = outcomes[i].point->vram_total;
            feasible.emplace_back(i, &*outcomes[i].point);
        } else {
            row.skip_reason = outcomes[i].skip_reason;
            ++result.skipped_infeasible;
        }
        if (outcomes[i].repaired) ++result.gamma_repaired;
        result.rows.push_back(std::move(row));
    }
    if (feasible.empty()) throw InfeasibleEpsilon("pareto_sweep: every sample was infeasible");

    // Non-dominated filter in the (VRAM, lambda) plane, both minimized.
    std::stable_sort(feasible.begin(), feasible.end(), [](const auto& a, const auto& b) {
        if (a.second->vram_total != b.second->vram_total)
            return a.second->vram_total < b.second->vram_total;
        return a.second->lambda < b.second->lambda;
    });
    double best_lambda = std::numeric_limits<double>::infinity();
    for (const auto& [index, point] : feasible) {
        if (point->lambda < best_lambda) {
            best_lambda = point->lambda;
            result.front.push_back(*point);
            result.rows[index].on_front = true;
        }
    }
    return result;
}

const ParetoPoint& select_allocation(const std::vector<ParetoPoint>& front,
                                     const SelectionPolicy& policy) {
    if (front.empty()) throw std::invalid_argument("select_allocation: empty front");
    switch (policy.kind) {
        case SelectionPolicy::Kind::MinLambda: {
            size_t best = 0;
            for (size_t i = 1; i < front.size(); ++i)
                if (front[i].lambda < front[best].lambda) best = i;
            return front[best];
        }
        case SelectionPolicy::Kind::MinVramWithinDelta: {
            double min_lambda = front.front().lambda;
            for (const ParetoPoint& p : front) min_lambda = std::min(min_lambda, p.lambda);
            const double threshold = (1.0 + policy.delta) * min_lambda;
            const ParetoPoint* best = nullptr;
            for (const ParetoPoint& p : front) {
                if (p.lambda > threshold) continue;
                if (best == nullptr || p.vram_total < best->vram_total) best = &p;
            }
            return *best;  // min-lambda point always qualifies
        }
        case SelectionPolicy::Kind::VramBudget: {
            const ParetoPoint* best = nullptr;
            for (const ParetoPoint& p : front) {
                if (p.vram_total > policy.cap) continue;
                if (best == nullptr || p.lambda < best->lambda) best = &p;
            }
            if (best == nullptr)
                throw std::invalid_argument(
                    "select_allocation: VRAM cap below the cheapest front point");
            return *best;
        }
    }
    throw std::logic_error("select_allocation: unknown policy");
}

BruteForceResult brute_force_optimum(int blocks, int clients, std::span<const int> budgets) {
    if (blocks < 1 || clients < 1 || static_cast<int>(budgets.size()) != clients)
        throw std::invalid_argument("brute_force_optimum: bad instance");
    const int cells = blocks * clients;
    if (cells > 20)
        throw std::invalid_argument("brute_force_optimum: instance too large (M*N > 20)");

    BruteForceResult best;
    best.gamma_max = 0;
    best.lambda_min = std::numeric_limits<double>::infinity();

    std::vector<int> col_sums(static_cast<size_t>(clients));
    std::vector<int> row_sums(static_cast<size_t>(blocks));
    const uint64_t limit = 1ULL << cells;
    for (uint64_t mask = 0; mask < limit; ++mask) {
        std::fill(col_sums.begin(), col_sums.end(), 0);
        std::fill(row_sums.begin(), row_sums.end(), 0);
        for (int bit = 0; bit < cells; ++bit) {
            if (mask & (1ULL << bit)) {
                row_sums[static_cast<size_t>(bit / clients)] += 1;
                col_sums[static_cast<size_t>(bit % clients)] += 1;
            }
        }
        bool ok = true;
        for (int n = 0; n < clients && ok; ++n)
            ok = col_sums[static_cast<size_t>(n)] >= 1 &&
                 col_sums[static_cast<size_t>(n)] <= budgets[static_cast<size_t>(n)];
        for (int m = 0; m < blocks && ok; ++m) ok = row_sums[static_cast<size_t>(m)] >= 1;
        if (!ok) continue;

        int min_least = std::numeric_limits<int>::max();
        std::vector<int> least_vector(static_cast<size_t>(clients));
        for (int n = 0; n < clients; ++n) {
            int least = std::numeric_limits<int>::max();
            for (int m = 0; m < blocks; ++m)
                if (mask & (1ULL << (m * clients + n)))
                    least = std::min(least, row_sums[static_cast<size_t>(m)]);
            min_least = std::min(min_least, least);
            least_vector[static_cast<size_t>(n)] = least;
        }
        const double lambda = lambda_from_least_popularity(least_vector);
        best.gamma_max = std::max(best.gamma_max, min_least);
        if (lambda < best.lambda_min) {
            best.lambda_min = lambda;
            ActivationMatrix witness(blocks, clients);
            for (int bit = 0; bit < cells; ++bit)
                if (mask & (1ULL << bit)) witness.set(bit / clients, bit % clients, true);
            best.witness = std::move(witness);
        }
    }
    if (best.gamma_max == 0)
        throw InfeasibleEpsilon("brute_force_optimum: no feasible matrix");
    return best;
}

}  // namespace zorba
