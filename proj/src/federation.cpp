#include "zorba/federation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <future>
#include <stdexcept>

namespace zorba {

namespace {

/// Apply the shared zeroth-order update in the canonical order (ascending
/// trial, then ascending block). Server and clients run this same function
/// on bit-identical inputs, which is what makes reconstruction exact.
void apply_scalar_update(std::span<double> params, const BlockLayout& layout,
                         const std::vector<PerturbationVector>& perturbations,
                         const std::vector<std::vector<double>>& rho_bar, double eta) {
    for (size_t q = 0; q < perturbations.size(); ++q) {
        for (int m = 0; m < layout.num_blocks(); ++m) {
            const double coef = eta * rho_bar[q][static_cast<size_t>(m)];
            std::span<double> block = block_slice(params, layout, m);
            std::span<const double> dir = block_slice(perturbations[q], layout, m);
            for (size_t i = 0; i < block.size(); ++i) block[i] -= coef * dir[i];
        }
    }
}

}  // namespace

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Zorba: return "zorba";
        case Scheme::FedZo: return "fedzo";
        case Scheme::DeComFl: return "decomfl";
        case Scheme::FedIt: return "fedit";
    }
    return "unknown";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "zorba") return Scheme::Zorba;
    if (name == "fedzo") return Scheme::FedZo;
    if (name == "decomfl") return Scheme::DeComFl;
    if (name == "fedit") return Scheme::FedIt;
    throw std::invalid_argument("unknown scheme '" + name + "'");
}

Federation::Federation(std::unique_ptr<Model> global_model, ActivationMatrix activation,
                       SeedPool pool, std::vector<ClientDataset> datasets,
                       FederationOptions options,
                       std::vector<std::unique_ptr<Model>> client_models)
    : server_model_(std::move(global_model)), activation_(std::move(activation)),
      pool_(std::move(pool)), options_(std::move(options)) {
    if (!options_.allow_invalid_activation) activation_.validate();
    const int N = activation_.clients();
    if (activation_.blocks() != server_model_->layout().num_blocks())
        throw std::invalid_argument("Federation: activation rows != model blocks");
    if (!datasets.empty() && static_cast<int>(datasets.size()) != N)
        throw std::invalid_argument("Federation: dataset count != client count");
    if (!client_models.empty() && static_cast<int>(client_models.size()) != N)
        throw std::invalid_argument("Federation: client model count != client count");
    if (options_.perturbations_per_round < 1)
        throw std::invalid_argument("Federation: need Q >= 1");

    inv_popularity_.resize(static_cast<size_t>(activation_.blocks()));
    for (int m = 0; m < activation_.blocks(); ++m) {
        const int pop = activation_.row_sum(m);
        inv_popularity_[static_cast<size_t>(m)] =
            pop > 0 ? 1.0 / static_cast<double>(pop) : 0.0;
    }

    clients_.reserve(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        ClientState client;
        client.index = n;
        client.model = client_models.empty() ? server_model_->clone()
                                             : std::move(client_models[static_cast<size_t>(n)]);
        client.mask = activation_.column(n);
        if (!datasets.empty()) client.data = std::move(datasets[static_cast<size_t>(n)]);
        else client.data.sampling_seed = SplitMix64::hash(pool_.master_seed,
                                                          0xc11e47ULL + static_cast<uint64_t>(n));
        clients_.push_back(std::move(client));
    }
    check_reconstruction(0);
}

Batch Federation::batch_for(const ClientState& client, int round, int trial) const {
    const int key = options_.batch_per_perturbation ? round * 131071 + trial + 1 : round;
    if (!client.data.examples.empty())
        return client.data.make_batch(key, options_.batch_size);
    Batch batch;
    batch.xi_seed = SplitMix64::hash(
        SplitMix64::hash(client.data.sampling_seed, static_cast<uint64_t>(key)), 0xba7c4ULL);
    return batch;
}

void Federation::for_each_client(const std::function<void(ClientState&)>& fn) {
    const int threads = std::max(1, options_.threads);
    if (threads == 1 || clients_.size() <= 1) {
        for (ClientState& c : clients_) fn(c);
        return;
    }
    std::atomic<size_t> cursor{0};
    std::vector<std::future<void>> futures;
    const size_t workers = std::min(static_cast<size_t>(threads), clients_.size());
    futures.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&]() {
            for (;;) {
                const size_t i = cursor.fetch_add(1);
                if (i >= clients_.size()) return;
                fn(clients_[i]);
            }
        }));
    }
    for (auto& f : futures) f.get();
}

void Federation::check_reconstruction(int round) const {
    const std::span<const double> reference = server_model_->params();
    for (const ClientState& client : clients_) {
        const std::span<const double> local = client.model->params();
        if (local.size() != reference.size() ||
            std::memcmp(local.data(), reference.data(), reference.size() * sizeof(double)) != 0)
            throw ProtocolViolation("round " + std::to_string(round) + ": client " +
                                    std::to_string(client.index) +
                                    " reconstructed a different model");
    }
}

RoundRecord Federation::run_round(int round) {
    switch (options_.scheme) {
        case Scheme::Zorba: return run_round_zorba(round);
        case Scheme::FedZo: return run_round_fedzo(round);
        case Scheme::DeComFl: return run_round_decomfl(round);
        case Scheme::FedIt: return run_round_fedit(round);
    }
    throw std::logic_error("run_round: unknown scheme");
}

RoundRecord Federation::run_round_zorba(int round) {
    const int N = num_clients();
    const int M = activation_.blocks();
    const int Q = options_.perturbations_per_round;
    const BlockLayout& layout = server_model_->layout();

    RoundRecord record;
    record.round = round;
    record.scheme = Scheme::Zorba;
    record.seeds = select_round_seeds(pool_, round, Q);

    std::vector<std::vector<double>> rho(static_cast<size_t>(N),
                                         std::vector<double>(static_cast<size_t>(Q), 0.0));
    std::vector<double> base_loss(static_cast<size_t>(N), 0.0);

    // Each client draws its own copies of the shared perturbations, uploads
    // Q finite differences, and holds the vectors for the update phase.
    std::vector<std::vector<PerturbationVector>> client_perturbations(
        static_cast<size_t>(N));
    for_each_client([&](ClientState& client) {
        auto& vs = client_perturbations[static_cast<size_t>(client.index)];
        vs.reserve(static_cast<size_t>(Q));
        for (int q = 0; q < Q; ++q)
            vs.push_back(generate_perturbation(record.seeds[static_cast<size_t>(q)], layout,
                                               options_.perturbation_mode));
        const Batch round_batch = batch_for(client, round, 0);
        base_loss[static_cast<size_t>(client.index)] = client.model->loss(round_batch);
        for (int q = 0; q < Q; ++q) {
            const Batch batch =
                options_.batch_per_perturbation ? batch_for(client, round, q) : round_batch;
            const FiniteDifference fd = finite_difference(
                *client.model, client.mask, vs[static_cast<size_t>(q)], options_.mu, batch,
                client.index, round, options_.diff_scheme, options_.mask_mode);
            rho[static_cast<size_t>(client.index)][static_cast<size_t>(q)] = fd.rho;
        }
    });

    // Aggregation: rho_bar[q][m] = (1/Q) * sum_n a_{m,n}/c_m * rho_{q,n}, in
    // canonical client order.
    const double inv_q = 1.0 / static_cast<double>(Q);
    record.rho_bar.assign(static_cast<size_t>(Q),
                          std::vector<double>(static_cast<size_t>(M), 0.0));
    for (int q = 0; q < Q; ++q) {
        for (int m = 0; m < M; ++m) {
            double acc = 0.0;
            const double weight = inv_popularity_[static_cast<size_t>(m)];
            for (int n = 0; n < N; ++n)
                if (activation_.at(m, n))
                    acc += weight * rho[static_cast<size_t>(n)][static_cast<size_t>(q)];
            record.rho_bar[static_cast<size_t>(q)][static_cast<size_t>(m)] = acc * inv_q;
        }
    }

    // Server regenerates the perturbations from the seeds and updates; every
    // client applies the identical update to its replica.
    {
        std::vector<PerturbationVector> vs;
        vs.reserve(static_cast<size_t>(Q));
        for (int q = 0; q < Q; ++q)
            vs.push_back(generate_perturbation(record.seeds[static_cast<size_t>(q)], layout,
                                               options_.perturbation_mode));
        apply_scalar_update(server_model_->params(), layout, vs, record.rho_bar, options_.eta);
    }
    for_each_client([&](ClientState& client) {
        apply_scalar_update(client.model->params(), layout,
                            client_perturbations[static_cast<size_t>(client.index)],
                            record.rho_bar, options_.eta);
    });
    check_reconstruction(round);

    record.comm.up_scalars = static_cast<long long>(N) * Q;
    record.comm.down_scalars = static_cast<long long>(Q) * M;
    record.comm.down_seed_ids = Q;
    ledger_.add(record.comm);

    double loss_sum = 0.0;
    for (double l : base_loss) loss_sum += l;
    record.train_loss = loss_sum / static_cast<double>(N);
    if (options_.record_rho) record.rho = std::move(rho);
    return record;
}

RoundRecord Federation::run_round_decomfl(int round) {
    const int N = num_clients();
    const int M = activation_.blocks();
    const int Q = options_.perturbations_per_round;
    const BlockLayout& layout = server_model_->layout();
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
            if (!activation_.at(m, n))
                throw UnsupportedCombination("decomfl requires full activation");

    RoundRecord record;
    record.round = round;
    record.scheme = Scheme::DeComFl;
    record.seeds = select_round_seeds(pool_, round, Q);

    std::vector<std::vector<double>> rho(static_cast<size_t>(N),
                                         std::vector<double>(static_cast<size_t>(Q), 0.0));
    std::vector<double> base_loss(static_cast<size_t>(N), 0.0);
    std::vector<std::vector<PerturbationVector>> client_perturbations(
        static_cast<size_t>(N));
    for_each_client([&](ClientState& client) {
        auto& vs = client_perturbations[static_cast<size_t>(client.index)];
        vs.reserve(static_cast<size_t>(Q));
        for (int q = 0; q < Q; ++q)
            vs.push_back(generate_perturbation(record.seeds[static_cast<size_t>(q)], layout,
                                               options_.perturbation_mode));
        const Batch round_batch = batch_for(client, round, 0);
        base_loss[static_cast<size_t>(client.index)] = client.model->loss(round_batch);
        for (int q = 0; q < Q; ++q) {
            const Batch batch =
                options_.batch_per_perturbation ? batch_for(client, round, q) : round_batch;
            const FiniteDifference fd = finite_difference(
                *client.model, client.mask, vs[static_cast<size_t>(q)], options_.mu, batch,
                client.index, round, options_.diff_scheme, options_.mask_mode);
            rho[static_cast<size_t>(client.index)][static_cast<size_t>(q)] = fd.rho;
        }
    });

    // Uniform 1/N weights; the same arithmetic as the heterogeneous path
    // with an all-ones matrix, so the two trajectories match bit for bit.
    const double inv_q = 1.0 / static_cast<double>(Q);
    const double weight = 1.0 / static_cast<double>(N);
    record.rho_bar.assign(static_cast<size_t>(Q),
                          std::vector<double>(static_cast<size_t>(M), 0.0));
    for (int q = 0; q < Q; ++q) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n)
            acc += weight * rho[static_cast<size_t>(n)][static_cast<size_t>(q)];
        const double rho_bar_q = acc * inv_q;
        for (int m = 0; m < M; ++m)
            record.rho_bar[static_cast<size_t>(q)][static_cast<size_t>(m)] = rho_bar_q;
    }

    {
        std::vector<PerturbationVector> vs;
        vs.reserve(static_cast<size_t>(Q));
        for (int q = 0; q < Q; ++q)
            vs.push_back(generate_perturbation(record.seeds[static_cast<size_t>(q)], layout,
                                               options_.perturbation_mode));
        apply_scalar_update(server_model_->params(), layout, vs, record.rho_bar, options_.eta);
    }
    for_each_client([&](ClientState& client) {
        apply_scalar_update(client.model->params(), layout,
                            client_perturbations[static_cast<size_t>(client.index)],
                            record.rho_bar, options_.eta);
    });
    check_reconstruction(round);

    record.comm.up_scalars = static_cast<long long>(N) * Q;
    record.comm.down_scalars = Q;
    record.comm.down_seed_ids = Q;
    ledger_.add(record.comm);

    double loss_sum = 0.0;
    for (double l : base_loss) loss_sum += l;
    record.train_loss = loss_sum / static_cast<double>(N);
    if (options_.record_rho) record.rho = std::move(rho);
    return record;
}

RoundRecord Federation::run_round_fedzo(int round) {
    const int N = num_clients();
    const int M = activation_.blocks();
    const BlockLayout& layout = server_model_->layout();
    const int64_t d = layout.d;
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
            if (!activation_.at(m, n))
                throw UnsupportedCombination("fedzo requires full activation");

    RoundRecord record;
    record.round = round;
    record.scheme = Scheme::FedZo;

    uint64_t shared_seed = 0;
    if (options_.fedzo_shared_perturbation)
        shared_seed = select_round_seeds(pool_, round, 1).front();

    // Each client perturbs along its own direction and uploads the full
    // d-dimensional estimate.
    std::vector<std::vector<double>> estimates(static_cast<size_t>(N));
    std::vector<double> base_loss(static_cast<size_t>(N), 0.0);
    for_each_client([&](ClientState& client) {
        const uint64_t seed = options_.fedzo_shared_perturbation
                                  ? shared_seed
                                  : SplitMix64::hash(
                                        SplitMix64::hash(pool_.master_seed,
                                                         static_cast<uint64_t>(round)),
                                        0xfed0ULL + static_cast<uint64_t>(client.index));
        const PerturbationVector v =
            generate_perturbation(seed, layout, options_.perturbation_mode);
        const Batch batch = batch_for(client, round, 0);
        base_loss[static_cast<size_t>(client.index)] = client.model->loss(batch);
        const FiniteDifference fd =
            finite_difference(*client.model, client.mask, v, options_.mu, batch, client.index,
                              round, options_.diff_scheme, options_.mask_mode);
        auto& g = estimates[static_cast<size_t>(client.index)];
        g.resize(static_cast<size_t>(d));
        for (int64_t i = 0; i < d; ++i)
            g[static_cast<size_t>(i)] = fd.rho * v.values[static_cast<size_t>(i)];
    });

    std::span<double> params = server_model_->params();
    const double inv_n = 1.0 / static_cast<double>(N);
    for (int64_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n) acc += estimates[static_cast<size_t>(n)][static_cast<size_t>(i)];
        params[static_cast<size_t>(i)] -= options_.eta * inv_n * acc;
    }
    // Model broadcast: clients adopt the server parameters wholesale.
    for_each_client([&](ClientState& client) {
        std::span<double> local = client.model->params();
        std::copy(params.begin(), params.end(), local.begin());
    });
    check_reconstruction(round);

    record.comm.up_scalars = static_cast<long long>(N) * d;
    record.comm.down_scalars = static_cast<long long>(N) * d;
    ledger_.add(record.comm);

    double loss_sum = 0.0;
    for (double l : base_loss) loss_sum += l;
    record.train_loss = loss_sum / static_cast<double>(N);
    return record;
}

RoundRecord Federation::run_round_fedit(int round) {
    const int N = num_clients();
    const BlockLayout& layout = server_model_->layout();
    const int64_t d = layout.d;
    if (dynamic_cast<QuadraticModel*>(server_model_.get()) == nullptr)
        throw UnsupportedCombination("fedit requires the quadratic backend");

    RoundRecord record;
    record.round = round;
    record.scheme = Scheme::FedIt;

    std::vector<std::vector<double>> gradients(static_cast<size_t>(N));
    std::vector<double> base_loss(static_cast<size_t>(N), 0.0);
    for_each_client([&](ClientState& client) {
        const Batch batch = batch_for(client, round, 0);
        base_loss[static_cast<size_t>(client.index)] = client.model->loss(batch);
        gradients[static_cast<size_t>(client.index)] = analytic_gradient(*client.model, batch);
    });

    std::span<double> params = server_model_->params();
    const double inv_n = 1.0 / static_cast<double>(N);
    for (int64_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n) acc += gradients[static_cast<size_t>(n)][static_cast<size_t>(i)];
        params[static_cast<size_t>(i)] -= options_.eta * inv_n * acc;
    }
    for_each_client([&](ClientState& client) {
        std::span<double> local = client.model->params();
        std::copy(params.begin(), params.end(), local.begin());
    });
    check_reconstruction(round);

    record.comm.up_scalars = static_cast<long long>(N) * d;
    record.comm.down_scalars = static_cast<long long>(N) * d;
    ledger_.add(record.comm);

    double loss_sum = 0.0;
    for (double l : base_loss) loss_sum += l;
    record.train_loss = loss_sum / static_cast<double>(N);
    return record;
}

double Federation::quadratic_global_loss() const {
    const std::span<const double> w = server_model_->params();
    double total = 0.0;
    int counted = 0;
    for (const ClientState& client : clients_) {
        const auto* quad = dynamic_cast<const QuadraticModel*>(client.model.get());
        if (quad == nullptr)
            throw std::invalid_argument("quadratic_global_loss: not a quadratic backend");
        const std::vector<double>& target = quad->target();
        double acc = 0.0;
        for (size_t i = 0; i < target.size(); ++i) {
            const double diff = w[i] - target[i];
            acc += diff * diff;
        }
        total += 0.5 * acc;
        ++counted;
    }
    return total / static_cast<double>(counted);
}

}  // namespace zorba
