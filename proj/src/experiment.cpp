#include "zorba/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zorba/transformer.hpp"

namespace zorba {

namespace {

BlockLayout quadratic_layout(const QuadraticConfig& q) {
    std::vector<int64_t> dims(static_cast<size_t>(q.blocks), q.dimension / q.blocks);
    for (int64_t i = 0; i < q.dimension % q.blocks; ++i) dims[static_cast<size_t>(i)] += 1;
    return BlockLayout(std::move(dims));
}

std::vector<double> quadratic_target(const ExperimentConfig& config, int client) {
    const int64_t d = config.quadratic.dimension;
    std::vector<double> target(static_cast<size_t>(d));
    GaussianStream shared(SplitMix64::hash(config.seeds.data, 0xaaULL));
    for (double& t : target) t = config.quadratic.target_scale * shared.next();
    if (client >= 0 && config.quadratic.target_spread > 0.0) {
        GaussianStream own(SplitMix64::hash(config.seeds.data,
                                            0xbb00ULL + static_cast<uint64_t>(client)));
        for (double& t : target) t += config.quadratic.target_spread * own.next();
    }
    return target;
}

void init_quadratic_params(const ExperimentConfig& config, Model& model) {
    GaussianStream init(SplitMix64::hash(config.seeds.data, 0xccULL));
    std::span<double> params = model.params();
    for (double& p : params) p = config.quadratic.init_scale * init.next();
}

}  // namespace

std::unique_ptr<Model> build_model(const ExperimentConfig& config, int client) {
    if (config.backend == ModelBackend::Quadratic) {
        auto model = std::make_unique<QuadraticModel>(quadratic_layout(config.quadratic),
                                                      quadratic_target(config, client),
                                                      config.quadratic.noise_sigma);
        init_quadratic_params(config, *model);
        return model;
    }
    return std::make_unique<TinyTransformerModel>(config.transformer);
}

VramProfile resolve_vram_profile(const ExperimentConfig& config, double psi_md) {
    VramProfile profile;
    profile.psi_md = config.vram.psi_md_override.value_or(psi_md);
    if (!config.vram.psi_max.empty()) {
        profile.psi_max = config.vram.psi_max;
    } else {
        const double block = block_activation_cost(config.arch);
        const double lo = config.vram.uniform_min.value_or(static_cast<double>(config.arch.blocks));
        const double hi = config.vram.uniform_max.value_or(static_cast<double>(config.arch.blocks));
        SplitMix64 rng(SplitMix64::hash(config.vram.capacity_seed, 0xca9ULL));
        profile.psi_max.resize(static_cast<size_t>(config.clients));
        for (double& cap : profile.psi_max) {
            const double blocks = lo + (hi - lo) * rng.uniform01();
            cap = profile.psi_md + blocks * block;
        }
    }
    profile.epsilon.assign(profile.psi_max.size(), 0.0);
    profile.validate(config.arch);
    return profile;
}

PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData prepared;
    if (config.backend == ModelBackend::Quadratic) return prepared;

    std::vector<Example> all;
    if (!config.data.jsonl_path.empty()) {
        all = load_jsonl(config.data.jsonl_path, config.transformer.vocab,
                         config.transformer.max_seq_len);
    } else {
        SyntheticSpec spec;
        spec.kind = config.data.kind;
        spec.classes = config.transformer.classes;
        spec.size = config.data.size;
        spec.seed = config.seeds.data;
        spec.features = config.data.features;
        spec.vocab = config.transformer.vocab;
        spec.seq_len = config.transformer.max_seq_len;
        spec.signal = config.data.signal;
        all = make_synthetic_classification(spec);
    }

    const size_t holdout =
        static_cast<size_t>(std::floor(config.data.holdout_fraction *
                                       static_cast<double>(all.size())));
    std::vector<Example> train(all.begin(), all.end() - static_cast<int64_t>(holdout));
    prepared.holdout.assign(all.end() - static_cast<int64_t>(holdout), all.end());
    prepared.shards = dirichlet_partition(train, config.clients, config.data.concentration,
                                          config.seeds.data);
    return prepared;
}

AllocationOutcome run_allocation(const ExperimentConfig& config) {
    const std::unique_ptr<Model> probe = build_model(config, -1);
    const VramProfile profile =
        resolve_vram_profile(config, static_cast<double>(probe->layout().d));
    SweepOptions options;
    options.include_tau_zero = config.allocator.include_tau_zero;
    options.per_client_tau = config.allocator.per_client_tau;
    options.threads = config.threads;
    AllocationOutcome outcome{
        pareto_sweep(profile, config.arch, config.allocator.samples, config.seeds.sweep,
                     options),
        {}};
    outcome.selected = select_allocation(outcome.sweep.front, config.allocator.policy);
    return outcome;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<ActivationMatrix>& allocation_override,
                                const RoundSink& round_sink) {
    config.validate();
    const int N = config.clients;

    // Activation matrix: explicit rows beat an override, the block-activation
    // scheme can run its own sweep, the full-model baselines use all-ones.
    ActivationMatrix activation;
    if (config.allocation_rows) {
        activation = ActivationMatrix::from_row_strings(*config.allocation_rows);
    } else if (allocation_override) {
        activation = *allocation_override;
        if (activation.blocks() != config.arch.blocks || activation.clients() != N)
            throw std::invalid_argument("run_experiment: allocation shape mismatch");
    } else if (config.scheme == Scheme::Zorba) {
        activation = run_allocation(config).selected.matrix;
    } else {
        activation = ActivationMatrix::all_ones(config.arch.blocks, N);
    }
    activation.validate();

    std::unique_ptr<Model> global_model = build_model(config, -1);
    if (activation.blocks() != global_model->layout().num_blocks())
        throw std::invalid_argument("run_experiment: activation rows != model blocks");

    PreparedData data = prepare_data(config);

    FederationOptions options;
    options.scheme = config.scheme;
    options.perturbations_per_round = config.perturbations_per_round;
    options.batch_size = config.batch_size;
    options.eta = config.eta;
    options.mu = config.mu;
    options.perturbation_mode = config.perturbation_mode;
    options.diff_scheme = config.diff_scheme;
    options.mask_mode = config.mask_mode;
    options.batch_per_perturbation = config.batch_per_perturbation;
    options.threads = config.threads;
    options.record_rho = static_cast<bool>(round_sink);

    // Per-client quadratic targets differ while the parameters start shared.
    std::vector<std::unique_ptr<Model>> client_models;
    if (config.backend == ModelBackend::Quadratic && config.quadratic.target_spread > 0.0) {
        client_models.reserve(static_cast<size_t>(N));
        for (int n = 0; n < N; ++n) client_models.push_back(build_model(config, n));
    }

    Federation federation(std::move(global_model), activation,
                          SeedPool::derive(config.seeds.master, config.seed_pool_size),
                          std::move(data.shards), options, std::move(client_models));

    ExperimentResult result;
    result.activation = activation;
    result.lambda = lambda_value(activation);
    const VramProfile profile =
        resolve_vram_profile(config, static_cast<double>(federation.server_model().layout().d));
    result.vram_total = 0.0;
    for (int n = 0; n < N; ++n)
        result.vram_total += total_usage(activation.column(n), config.arch, profile.psi_md);

    const auto check_target = [&](int round, const MetricsRow& row) {
        if (!config.target || result.rounds_to_target) return;
        const TargetConfig& t = *config.target;
        bool reached = false;
        if (t.metric == "train_loss") reached = row.train_loss <= t.value;
        else if (row.eval_metric) {
            if (t.metric == "accuracy") reached = *row.eval_metric >= t.value;
            else reached = *row.eval_metric <= t.value;
        }
        if (reached) result.rounds_to_target = round;
    };

    result.rows.reserve(static_cast<size_t>(config.rounds));
    for (int t = 1; t <= config.rounds; ++t) {
        const RoundRecord record = federation.run_round(t);
        if (round_sink) round_sink(record);
        MetricsRow row;
        row.round = t;
        row.scheme = config.scheme;
        row.train_loss = record.train_loss;
        row.comm_up_scalars = record.comm.up_scalars;
        row.comm_down_scalars = record.comm.down_scalars;
        row.vram_total = result.vram_total;
        row.lambda = result.lambda;
        if (t % config.eval_interval == 0 || t == config.rounds) {
            if (config.backend == ModelBackend::Quadratic) {
                row.eval_metric = federation.quadratic_global_loss();
            } else {
                const auto& tf =
                    dynamic_cast<const TinyTransformerModel&>(federation.server_model());
                row.eval_metric = tf.accuracy(data.holdout);
            }
        }
        check_target(t, row);
        result.rows.push_back(row);
    }

    result.ledger = federation.ledger();
    const std::span<const double> params = federation.server_params();
    result.final_params.assign(params.begin(), params.end());
    return result;
}

}  // namespace zorba
