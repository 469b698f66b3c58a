#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zorba/activation.hpp"
#include "zorba/data.hpp"
#include "zorba/estimator.hpp"
#include "zorba/model.hpp"
#include "zorba/rng.hpp"

namespace zorba {

/// A client's reconstructed model disagrees with the server's by at least
/// one bit. The shared-seed mechanism guarantees this never happens; any
/// occurrence aborts the run.
struct ProtocolViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedCombination : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Scheme { Zorba, FedZo, DeComFl, FedIt };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

/// Transmitted-value counts for one round, split into payload scalars and
/// seed identifiers.
struct CommRound {
    long long up_scalars = 0;
    long long down_scalars = 0;
    long long up_seed_ids = 0;
    long long down_seed_ids = 0;
};

struct CommLedger {
    std::vector<CommRound> rounds;
    CommRound totals;

    void add(const CommRound& r) {
        rounds.push_back(r);
        totals.up_scalars += r.up_scalars;
        totals.down_scalars += r.down_scalars;
        totals.up_seed_ids += r.up_seed_ids;
        totals.down_seed_ids += r.down_seed_ids;
    }
};

/// What the server sends after aggregation: the round's seeds and the
/// averaged finite differences. rho_bar is Q x M because the aggregation
/// weights differ per block under heterogeneous activation; with uniform
/// weights every row is constant and the packet collapses to Q scalars.
struct BroadcastPacket {
    int round = 0;
    std::vector<uint64_t> seeds;
    std::vector<std::vector<double>> rho_bar;
};

/// Full protocol trace of one round.
struct RoundRecord {
    int round = 0;
    Scheme scheme = Scheme::Zorba;
    std::vector<uint64_t> seeds;
    std::vector<std::vector<double>> rho;      // N x Q (scalar-exchange schemes)
    std::vector<std::vector<double>> rho_bar;  // Q x M
    double train_loss = 0.0;
    CommRound comm;
};

struct FederationOptions {
    Scheme scheme = Scheme::Zorba;
    int perturbations_per_round = 10;  // Q
    int batch_size = 8;
    double eta = 5e-5;
    double mu = 1e-4;
    PerturbationMode perturbation_mode = PerturbationMode::UnitSphere;
    DiffScheme diff_scheme = DiffScheme::Forward;
    MaskMode mask_mode = MaskMode::ActivatedOnly;
    bool batch_per_perturbation = false;   // redraw the mini-batch per trial
    bool fedzo_shared_perturbation = false;  // ablation: force shared seeds
    bool allow_invalid_activation = false;   // unit tests only
    bool record_rho = true;
    int threads = 1;
};

/// One simulated server plus N clients holding model replicas. Client
/// parameter vectors equal the server's at the start of every round; each
/// round ends by checking that invariant bit-for-bit.
class Federation {
public:
    /// `datasets` may be empty for dataless backends (the quadratic loss);
    /// batches then carry only a deterministic noise key. Heterogeneous loss
    /// surfaces are passed via `client_models` (same layout, parameters
    /// bit-identical to the global model); by default every client gets a
    /// clone of the global model.
    Federation(std::unique_ptr<Model> global_model, ActivationMatrix activation, SeedPool pool,
               std::vector<ClientDataset> datasets, FederationOptions options,
               std::vector<std::unique_ptr<Model>> client_models = {});

    RoundRecord run_round(int round);
    RoundRecord run_round_zorba(int round);
    RoundRecord run_round_fedzo(int round);
    RoundRecord run_round_decomfl(int round);
    RoundRecord run_round_fedit(int round);

    int num_clients() const { return static_cast<int>(clients_.size()); }
    const Model& server_model() const { return *server_model_; }
    std::span<const double> server_params() const { return server_model_->params(); }
    const Model& client_model(int n) const { return *clients_[static_cast<size_t>(n)].model; }
    const ActivationMatrix& activation() const { return activation_; }
    const CommLedger& ledger() const { return ledger_; }
    const FederationOptions& options() const { return options_; }

    /// Mean noise-free quadratic loss over clients at the server parameters.
    double quadratic_global_loss() const;

private:
    struct ClientState {
        int index = 0;
        std::unique_ptr<Model> model;
        std::vector<uint8_t> mask;  // activation column
        ClientDataset data;
    };

    Batch batch_for(const ClientState& client, int round, int trial) const;
    void check_reconstruction(int round) const;
    void for_each_client(const std::function<void(ClientState&)>& fn);

    std::unique_ptr<Model> server_model_;
    ActivationMatrix activation_;
    SeedPool pool_;
    FederationOptions options_;
    std::vector<ClientState> clients_;
    CommLedger ledger_;
    std::vector<double> inv_popularity_;  // 1 / row_sum per block, 0 for empty rows
};

}  // namespace zorba
