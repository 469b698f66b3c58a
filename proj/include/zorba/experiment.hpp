#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "zorba/config.hpp"
#include "zorba/federation.hpp"

namespace zorba {

struct MetricsRow {
    int round = 0;
    Scheme scheme = Scheme::Zorba;
    double train_loss = 0.0;
    std::optional<double> eval_metric;  // accuracy (transformer) or global loss (quadratic)
    long long comm_up_scalars = 0;
    long long comm_down_scalars = 0;
    double vram_total = 0.0;
    double lambda = 0.0;
};

struct ExperimentResult {
    std::vector<MetricsRow> rows;
    CommLedger ledger;
    ActivationMatrix activation;
    double lambda = 0.0;
    double vram_total = 0.0;
    std::vector<double> final_params;
    std::optional<int> rounds_to_target;
};

/// Build the backend model for a config. For the quadratic backend the
/// returned model is client n's loss surface (its target differs per client
/// when target_spread > 0); pass n < 0 for the shared initial model.
std::unique_ptr<Model> build_model(const ExperimentConfig& config, int client);

/// Capacities per client, either explicit or drawn uniformly in block units.
VramProfile resolve_vram_profile(const ExperimentConfig& config, double psi_md);

/// Train/holdout split plus Dirichlet shards for the transformer backend.
struct PreparedData {
    std::vector<ClientDataset> shards;
    std::vector<Example> holdout;
};
PreparedData prepare_data(const ExperimentConfig& config);

/// Run the allocator stage on its own: sweep + policy selection.
struct AllocationOutcome {
    SweepResult sweep;
    ParetoPoint selected;
};
AllocationOutcome run_allocation(const ExperimentConfig& config);

/// Full pipeline: resolve the activation matrix (explicit rows, an override
/// from a previous allocate run, an inline sweep for the block-activation
/// scheme, or all-ones for the baselines), then execute T rounds and collect
/// per-round metrics. `round_sink`, when set, receives every round's full
/// protocol record (for trace files and replay checks).
using RoundSink = std::function<void(const RoundRecord&)>;
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<ActivationMatrix>& allocation_override = {},
                                const RoundSink& round_sink = nullptr);

}  // namespace zorba
