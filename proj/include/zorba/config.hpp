#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zorba/activation.hpp"
#include "zorba/allocator.hpp"
#include "zorba/data.hpp"
#include "zorba/federation.hpp"
#include "zorba/transformer.hpp"
#include "zorba/vram.hpp"

namespace zorba {

enum class ModelBackend { Quadratic, TinyTransformer };

struct QuadraticConfig {
    int64_t dimension = 32;
    int blocks = 4;
    double noise_sigma = 0.0;
    double target_scale = 1.0;   // shared component of every client target
    double target_spread = 0.0;  // per-client deviation; 0 = identical targets
    double init_scale = 1.0;     // initial parameter offset from the targets
};

struct DataConfig {
    SyntheticKind kind = SyntheticKind::Tokens;
    std::string jsonl_path;  // non-empty: load instead of synthesizing
    int size = 2000;
    double holdout_fraction = 0.2;
    double concentration = 1.0;  // Dirichlet concentration
    double signal = 0.5;
    int features = 16;
};

struct VramConfig {
    std::vector<double> psi_max;          // explicit capacities, or
    std::optional<double> uniform_min;    // capacities psi_md + u * psi_block,
    std::optional<double> uniform_max;    // u ~ U[min, max] blocks
    uint64_t capacity_seed = 0;
    std::optional<double> psi_md_override;
};

struct AllocatorConfig {
    int samples = 1000;  // E
    bool include_tau_zero = true;
    bool per_client_tau = false;
    SelectionPolicy policy;
};

struct TargetConfig {
    std::string metric = "accuracy";  // accuracy | eval_loss | train_loss
    double value = 0.8;
};

struct ExperimentSeeds {
    uint64_t master = 1;
    uint64_t data = 2;
    uint64_t sweep = 3;
};

struct ExperimentConfig {
    Scheme scheme = Scheme::Zorba;
    int rounds = 500;                 // T
    int clients = 50;                 // N
    int perturbations_per_round = 10; // Q
    int seed_pool_size = 4096;        // P
    int batch_size = 8;               // B
    double eta = 5e-5;
    double mu = 1e-4;
    int eval_interval = 10;
    PerturbationMode perturbation_mode = PerturbationMode::UnitSphere;
    DiffScheme diff_scheme = DiffScheme::Forward;
    MaskMode mask_mode = MaskMode::ActivatedOnly;
    bool batch_per_perturbation = false;
    int threads = 1;
    ExperimentSeeds seeds;

    ModelBackend backend = ModelBackend::TinyTransformer;
    QuadraticConfig quadratic;
    TinyTransformerSpec transformer;
    DataConfig data;

    ArchConfig arch;          // VRAM accounting shape (resolved in parse)
    VramConfig vram;
    AllocatorConfig allocator;
    std::optional<std::vector<std::string>> allocation_rows;  // fixed matrix
    std::optional<TargetConfig> target;
    nlohmann::json reference_targets;  // free-form metadata echoed in reports

    /// Rejects any setting that would violate a module precondition.
    void validate() const;
};

/// Parse a config JSON object. Unknown keys are rejected to catch typos.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON of the resolved config (defaults filled in).
nlohmann::json config_to_json(const ExperimentConfig& config);

/// FNV-1a hash of the canonical dump, printed in manifests.
uint64_t config_hash(const ExperimentConfig& config);

/// Matrix rows from JSON: ["110", ...] or [[1,1,0], ...].
ActivationMatrix activation_from_json(const nlohmann::json& rows);
nlohmann::json activation_to_json(const ActivationMatrix& matrix);

}  // namespace zorba
