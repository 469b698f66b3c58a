#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "zorba/rng.hpp"

namespace zorba {

/// One training example. Feature vectors feed the analytic backends, token
/// sequences feed the transformer; either side may be empty.
struct Example {
    std::vector<double> features;
    std::vector<int> tokens;
    int label = 0;
};

/// A mini-batch plus the stochastic-evaluation key. xi_seed drives whatever
/// noise the backend injects, so two evaluations of the same batch see the
/// same realization.
struct Batch {
    std::vector<Example> items;
    uint64_t xi_seed = 0;
};

/// Loss surface over a block-structured parameter vector. Forward-only:
/// nothing here computes or stores gradients.
class Model {
public:
    virtual ~Model() = default;

    virtual const BlockLayout& layout() const = 0;
    virtual std::span<double> params() = 0;
    virtual std::span<const double> params() const = 0;
    virtual double loss(const Batch& batch) const = 0;
    virtual std::unique_ptr<Model> clone() const = 0;
    virtual std::string_view backend_name() const = 0;
};

/// Analytic quadratic client loss: F(w; xi) = 0.5 * ||w - target||^2 plus a
/// linear noise term <sigma * z(xi), w> with z regenerated from xi. Exact
/// gradients make it the oracle backend for the statistical tests and the
/// first-order baseline.
class QuadraticModel final : public Model {
public:
    QuadraticModel(BlockLayout layout, std::vector<double> target, double noise_sigma);

    const BlockLayout& layout() const override { return layout_; }
    std::span<double> params() override { return params_; }
    std::span<const double> params() const override { return params_; }
    double loss(const Batch& batch) const override;
    std::unique_ptr<Model> clone() const override;
    std::string_view backend_name() const override { return "quadratic"; }

    /// Exact stochastic gradient w - target + sigma * z(xi).
    std::vector<double> gradient(const Batch& batch) const;
    /// Noise-free expected loss 0.5 * ||w - target||^2.
    double expected_loss() const;
    const std::vector<double>& target() const { return target_; }
    double noise_sigma() const { return noise_sigma_; }

private:
    BlockLayout layout_;
    std::vector<double> params_;
    std::vector<double> target_;
    double noise_sigma_;
};

/// Exact stochastic gradient of the quadratic backend. Throws
/// std::invalid_argument for any other backend.
std::vector<double> analytic_gradient(const Model& model, const Batch& batch);

/// Evaluate the loss at the current point and at the point shifted by
/// mu * direction on the blocks named in `touched_blocks`, restoring the
/// parameters bit-exactly afterwards. `direction` is a full-d vector whose
/// slices outside touched blocks are ignored. Returns (loss_plus, loss_base).
std::pair<double, double> perturb_eval_restore(Model& model,
                                               std::span<const int> touched_blocks,
                                               std::span<const double> direction, double mu,
                                               const Batch& batch);

}  // namespace zorba
