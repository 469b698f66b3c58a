#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstring>

#include "zorba/federation.hpp"
#include "zorba/transformer.hpp"

using namespace zorba;

TEST_SUITE_BEGIN("federation");

namespace {

std::unique_ptr<QuadraticModel> quadratic_at(BlockLayout layout, std::vector<double> start,
                                             std::vector<double> target,
                                             double noise_sigma = 0.0) {
    auto model = std::make_unique<QuadraticModel>(std::move(layout), std::move(target),
                                                  noise_sigma);
    std::copy(start.begin(), start.end(), model->params().begin());
    return model;
}

FederationOptions scalar_options(Scheme scheme, int Q, double eta) {
    FederationOptions options;
    options.scheme = scheme;
    options.perturbations_per_round = Q;
    options.eta = eta;
    options.mu = 1e-4;
    return options;
}

}  // namespace

TEST_CASE("single client, single trial reduces to w - eta * rho * v") {
    BlockLayout layout({2});
    auto model = quadratic_at(layout, {1.0, 0.0}, {0.0, 0.0});
    const std::vector<double> w_before(model->params().begin(), model->params().end());
    FederationOptions options = scalar_options(Scheme::Zorba, 1, 0.1);
    Federation federation(std::move(model), ActivationMatrix::all_ones(1, 1),
                          SeedPool::derive(4, 16), {}, options);
    const RoundRecord record = federation.run_round(1);
    REQUIRE(record.rho.size() == 1);
    const double rho = record.rho[0][0];
    const PerturbationVector v = generate_perturbation(record.seeds[0], layout,
                                                       PerturbationMode::UnitSphere);
    const std::span<const double> w_after = federation.server_params();
    for (int i = 0; i < 2; ++i)
        CHECK(w_after[static_cast<size_t>(i)] ==
              doctest::Approx(w_before[static_cast<size_t>(i)] -
                              0.1 * rho * v.values[static_cast<size_t>(i)])
                  .epsilon(1e-15));
}

TEST_CASE("aggregation weights split evenly among activators") {
    // two of three clients activate block 0; each contributes weight 1/2
    BlockLayout layout({2, 2});
    auto model = quadratic_at(layout, {1.0, 1.0, 1.0, 1.0}, {0, 0, 0, 0});
    const ActivationMatrix A = ActivationMatrix::from_row_strings({"110", "111"});
    FederationOptions options = scalar_options(Scheme::Zorba, 2, 0.05);
    Federation federation(std::move(model), A, SeedPool::derive(5, 16), {}, options);
    const RoundRecord record = federation.run_round(1);

    for (int q = 0; q < 2; ++q) {
        const double expected_block0 =
            0.5 * (record.rho[0][static_cast<size_t>(q)] +
                   record.rho[1][static_cast<size_t>(q)]) / 2.0;
        const double expected_block1 =
            (record.rho[0][static_cast<size_t>(q)] + record.rho[1][static_cast<size_t>(q)] +
             record.rho[2][static_cast<size_t>(q)]) / 3.0 / 2.0;
        CHECK(record.rho_bar[static_cast<size_t>(q)][0] ==
              doctest::Approx(expected_block0).epsilon(1e-15));
        CHECK(record.rho_bar[static_cast<size_t>(q)][1] ==
              doctest::Approx(expected_block1).epsilon(1e-15));
    }

    // weights over each block sum to one
    const PopularityProfile pop = popularity(A);
    for (int m = 0; m < 2; ++m) {
        double total = 0.0;
        for (int n = 0; n < 3; ++n)
            total += static_cast<double>(A.at(m, n)) /
                     static_cast<double>(pop.block_popularity[static_cast<size_t>(m)]);
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("masked clients leave frozen blocks out of their differences") {
    BlockLayout layout({2, 2});
    auto model = quadratic_at(layout, {1.0, 1.0, 1.0, 1.0}, {0, 0, 0, 0});
    const ActivationMatrix A = ActivationMatrix::from_row_strings({"10", "11"});
    FederationOptions options = scalar_options(Scheme::Zorba, 1, 0.05);
    Federation federation(std::move(model), A, SeedPool::derive(6, 16), {}, options);
    const RoundRecord record = federation.run_round(1);
    // client 1 activates only block 1: its rho equals the masked directional
    // derivative, recomputed here from the shared seed
    const PerturbationVector v = generate_perturbation(record.seeds[0], layout,
                                                       PerturbationMode::UnitSphere);
    double inner_masked = 0.0;
    for (int i = 2; i < 4; ++i) inner_masked += v.values[static_cast<size_t>(i)] * 1.0;
    double masked_norm_sq = 0.0;
    for (int i = 2; i < 4; ++i)
        masked_norm_sq += v.values[static_cast<size_t>(i)] * v.values[static_cast<size_t>(i)];
    CHECK(record.rho[1][0] ==
          doctest::Approx(inner_masked + 1e-4 / 2 * masked_norm_sq).epsilon(1e-9));
}

TEST_CASE("comm ledger counts match the protocol shapes") {
    const int N = 5, M = 3, Q = 4;
    BlockLayout layout({2, 2, 2});
    const std::vector<double> start(6, 1.0), target(6, 0.0);

    SUBCASE("scalar-exchange schemes") {
        auto model = quadratic_at(layout, start, target);
        FederationOptions options = scalar_options(Scheme::Zorba, Q, 0.01);
        Federation federation(std::move(model), ActivationMatrix::all_ones(M, N),
                              SeedPool::derive(7, 64), {}, options);
        federation.run_round(1);
        const CommRound comm = federation.ledger().rounds.back();
        CHECK(comm.up_scalars == N * Q);
        CHECK(comm.down_scalars == Q * M);
        CHECK(comm.down_seed_ids == Q);

        auto model2 = quadratic_at(layout, start, target);
        FederationOptions opt2 = scalar_options(Scheme::DeComFl, Q, 0.01);
        Federation decomfl(std::move(model2), ActivationMatrix::all_ones(M, N),
                           SeedPool::derive(7, 64), {}, opt2);
        decomfl.run_round(1);
        const CommRound comm2 = decomfl.ledger().rounds.back();
        CHECK(comm2.up_scalars == N * Q);
        CHECK(comm2.down_scalars == Q);
        CHECK(comm2.down_seed_ids == Q);
    }

    SUBCASE("full-vector schemes move N*d each way") {
        auto model = quadratic_at(layout, start, target);
        FederationOptions options = scalar_options(Scheme::FedZo, 1, 0.01);
        Federation fedzo(std::move(model), ActivationMatrix::all_ones(M, N),
                         SeedPool::derive(7, 64), {}, options);
        fedzo.run_round(1);
        CHECK(fedzo.ledger().rounds.back().up_scalars == N * 6);
        CHECK(fedzo.ledger().rounds.back().down_scalars == N * 6);

        auto model2 = quadratic_at(layout, start, target);
        FederationOptions opt2 = scalar_options(Scheme::FedIt, 1, 0.01);
        Federation fedit(std::move(model2), ActivationMatrix::all_ones(M, N),
                         SeedPool::derive(7, 64), {}, opt2);
        fedit.run_round(1);
        CHECK(fedit.ledger().rounds.back().up_scalars == N * 6);
        CHECK(fedit.ledger().rounds.back().down_scalars == N * 6);
    }
}

TEST_CASE("reference comm arithmetic at the published scale") {
    // N=50, Q=10, M=12: up 500 scalars, down 10 seed ids + 120 scalars;
    // the full-gradient baseline moves N*d = 2.5e6 scalars up per round at
    // d = 5e4, a d/Q = 5e3 ratio over the scalar uplink per client.
    CHECK(50 * 10 == 500);
    CHECK(10 * 12 == 120);
    CHECK(50LL * 50000 == 2500000LL);
    CHECK(50000 / 10 == 5000);
}

TEST_CASE("uniform baseline equals the heterogeneous path on all-ones") {
    BlockLayout layout({3, 3});
    std::vector<double> target(6);
    GaussianStream tg(44);
    tg.fill(target);
    auto make = [&](Scheme scheme) {
        auto model = quadratic_at(layout, std::vector<double>(6, 0.5), target, 0.05);
        FederationOptions options = scalar_options(scheme, 2, 0.02);
        return Federation(std::move(model), ActivationMatrix::all_ones(2, 3),
                          SeedPool::derive(8, 32), {}, options);
    };
    Federation a = make(Scheme::Zorba);
    Federation b = make(Scheme::DeComFl);
    for (int t = 1; t <= 20; ++t) {
        a.run_round(t);
        b.run_round(t);
        CHECK(std::memcmp(a.server_params().data(), b.server_params().data(),
                          6 * sizeof(double)) == 0);
    }
}

TEST_CASE("forced shared perturbations align fedzo with the scalar path") {
    BlockLayout layout({2, 2});
    std::vector<double> target(4, 0.0);
    auto make = [&](Scheme scheme, bool shared) {
        auto model = quadratic_at(layout, {1.0, -0.5, 0.25, 2.0}, target);
        FederationOptions options = scalar_options(scheme, 1, 0.05);
        options.fedzo_shared_perturbation = shared;
        return Federation(std::move(model), ActivationMatrix::all_ones(2, 2),
                          SeedPool::derive(15, 32), {}, options);
    };
    Federation fedzo = make(Scheme::FedZo, true);
    Federation scalar = make(Scheme::Zorba, false);
    fedzo.run_round(1);
    scalar.run_round(1);
    const std::span<const double> a = fedzo.server_params();
    const std::span<const double> b = scalar.server_params();
    for (size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("first-order contraction on the quadratic") {
    BlockLayout layout({2});
    auto model = quadratic_at(layout, {3.0, 4.0}, {0.0, 0.0});
    FederationOptions options = scalar_options(Scheme::FedIt, 1, 0.25);
    Federation federation(std::move(model), ActivationMatrix::all_ones(1, 1),
                          SeedPool::derive(12, 16), {}, options);
    double f = federation.quadratic_global_loss();
    CHECK(f == doctest::Approx(12.5));
    for (int t = 1; t <= 5; ++t) {
        federation.run_round(t);
        const double next = federation.quadratic_global_loss();
        CHECK(next == doctest::Approx(0.75 * 0.75 * f).epsilon(1e-12));
        f = next;
    }
}

TEST_CASE("fedit rejects the forward-only backend") {
    TinyTransformerSpec spec;
    spec.vocab = 16;
    spec.max_seq_len = 4;
    spec.init_seed = 1;
    auto model = std::make_unique<TinyTransformerModel>(spec);
    SyntheticSpec data;
    data.kind = SyntheticKind::Tokens;
    data.size = 16;
    data.seed = 2;
    data.vocab = 16;
    data.seq_len = 4;
    std::vector<ClientDataset> shards =
        dirichlet_partition(make_synthetic_classification(data), 2, 1.0, 3);
    FederationOptions options = scalar_options(Scheme::FedIt, 1, 0.1);
    Federation federation(std::move(model), ActivationMatrix::all_ones(4, 2),
                          SeedPool::derive(13, 16), std::move(shards), options);
    CHECK_THROWS_AS(federation.run_round(1), UnsupportedCombination);
}

TEST_CASE("baselines require full activation") {
    BlockLayout layout({2, 2});
    auto model = quadratic_at(layout, {1, 1, 1, 1}, {0, 0, 0, 0});
    const ActivationMatrix partial = ActivationMatrix::from_row_strings({"10", "11"});
    FederationOptions options = scalar_options(Scheme::DeComFl, 1, 0.1);
    Federation federation(std::move(model), partial, SeedPool::derive(14, 16), {}, options);
    CHECK_THROWS_AS(federation.run_round(1), UnsupportedCombination);
}

TEST_CASE("blocks with no activator are fixed points") {
    // reachable only with validation off; the update must leave the row
    // bitwise untouched
    BlockLayout layout({2, 2});
    auto model = quadratic_at(layout, {1.0, 2.0, 3.0, 4.0}, {0, 0, 0, 0});
    ActivationMatrix A(2, 2);
    A.set(0, 0, true);
    A.set(0, 1, true);  // block 1 has no activator
    FederationOptions options = scalar_options(Scheme::Zorba, 2, 0.1);
    options.allow_invalid_activation = true;
    Federation federation(std::move(model), A, SeedPool::derive(16, 32), {}, options);
    const std::vector<double> before(federation.server_params().begin(),
                                     federation.server_params().end());
    for (int t = 1; t <= 3; ++t) federation.run_round(t);
    const std::span<const double> after = federation.server_params();
    CHECK(after[2] == before[2]);
    CHECK(after[3] == before[3]);
    CHECK(after[0] != before[0]);
}

TEST_CASE("client replicas stay bit-identical across rounds and modes") {
    TinyTransformerSpec spec;
    spec.vocab = 32;
    spec.hidden = 16;
    spec.heads = 2;
    spec.blocks = 3;
    spec.max_seq_len = 6;
    spec.init_seed = 21;
    SyntheticSpec data;
    data.kind = SyntheticKind::Tokens;
    data.size = 60;
    data.seed = 22;
    data.vocab = 32;
    data.seq_len = 6;
    const std::vector<Example> dataset = make_synthetic_classification(data);

    for (MaskMode mask_mode : {MaskMode::ActivatedOnly, MaskMode::FullVector}) {
        auto model = std::make_unique<TinyTransformerModel>(spec);
        const ActivationMatrix A =
            ActivationMatrix::from_row_strings({"1100", "0110", "1011"});
        FederationOptions options = scalar_options(Scheme::Zorba, 3, 1e-3);
        options.mask_mode = mask_mode;
        options.batch_size = 4;
        Federation federation(std::move(model), A, SeedPool::derive(23, 64),
                              dirichlet_partition(dataset, 4, 1.0, 24), options);
        for (int t = 1; t <= 4; ++t) {
            const RoundRecord record = federation.run_round(t);  // throws on any mismatch
            CHECK(record.train_loss > 0.0);
            for (int n = 0; n < federation.num_clients(); ++n) {
                CHECK(std::memcmp(federation.client_model(n).params().data(),
                                  federation.server_params().data(),
                                  federation.server_params().size() * sizeof(double)) == 0);
            }
        }
    }
}

TEST_CASE("threaded client evaluation changes nothing") {
    BlockLayout layout({4, 4});
    std::vector<double> target(8);
    GaussianStream tg(31);
    tg.fill(target);
    auto make = [&](int threads) {
        auto model = quadratic_at(layout, std::vector<double>(8, 1.0), target, 0.1);
        FederationOptions options = scalar_options(Scheme::Zorba, 3, 0.02);
        options.threads = threads;
        return Federation(std::move(model), ActivationMatrix::all_ones(2, 6),
                          SeedPool::derive(17, 64), {}, options);
    };
    Federation sequential = make(1);
    Federation threaded = make(4);
    for (int t = 1; t <= 10; ++t) {
        sequential.run_round(t);
        threaded.run_round(t);
    }
    CHECK(std::memcmp(sequential.server_params().data(), threaded.server_params().data(),
                      8 * sizeof(double)) == 0);
}

TEST_SUITE_END();
