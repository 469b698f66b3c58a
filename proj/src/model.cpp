#include "zorba/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace zorba {

QuadraticModel::QuadraticModel(BlockLayout layout, std::vector<double> target,
                               double noise_sigma)
    : layout_(std::move(layout)), target_(std::move(target)), noise_sigma_(noise_sigma) {
    if (static_cast<int64_t>(target_.size()) != layout_.d)
        throw std::invalid_argument("QuadraticModel: target dimension mismatch");
    if (noise_sigma_ < 0.0) throw std::invalid_argument("QuadraticModel: negative noise sigma");
    params_.assign(static_cast<size_t>(layout_.d), 0.0);
}

double QuadraticModel::loss(const Batch& batch) const {
    double quad = 0.0;
    for (size_t i = 0; i < params_.size(); ++i) {
        const double diff = params_[i] - target_[i];
        quad += diff * diff;
    }
    double value = 0.5 * quad;
    if (noise_sigma_ > 0.0) {
        GaussianStream noise(batch.xi_seed);
        for (double p : params_) value += noise_sigma_ * noise.next() * p;
    }
    if (!std::isfinite(value)) throw std::runtime_error("QuadraticModel: non-finite loss");
    return value;
}

std::unique_ptr<Model> QuadraticModel::clone() const {
    auto copy = std::make_unique<QuadraticModel>(layout_, target_, noise_sigma_);
    copy->params_ = params_;
    return copy;
}

std::vector<double> QuadraticModel::gradient(const Batch& batch) const {
    std::vector<double> g(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) g[i] = params_[i] - target_[i];
    if (noise_sigma_ > 0.0) {
        GaussianStream noise(batch.xi_seed);
        for (double& gi : g) gi += noise_sigma_ * noise.next();
    }
    return g;
}

double QuadraticModel::expected_loss() const {
    double quad = 0.0;
    for (size_t i = 0; i < params_.size(); ++i) {
        const double diff = params_[i] - target_[i];
        quad += diff * diff;
    }
    return 0.5 * quad;
}

std::vector<double> analytic_gradient(const Model& model, const Batch& batch) {
    const auto* quad = dynamic_cast<const QuadraticModel*>(&model);
    if (quad == nullptr)
        throw std::invalid_argument("analytic_gradient: unsupported backend '" +
                                    std::string(model.backend_name()) + "'");
    return quad->gradient(batch);
}

std::pair<double, double> perturb_eval_restore(Model& model,
                                               std::span<const int> touched_blocks,
                                               std::span<const double> direction, double mu,
                                               const Batch& batch) {
    if (mu <= 0.0) throw std::invalid_argument("perturb_eval_restore: mu must be positive");
    const BlockLayout& layout = model.layout();
    if (static_cast<int64_t>(direction.size()) != layout.d)
        throw std::invalid_argument("perturb_eval_restore: direction dimension mismatch");

    const double loss_base = model.loss(batch);

    // Snapshot only the touched blocks; restoring the copy is bit-exact
    // where add-then-subtract would not be.
    std::vector<std::vector<double>> snapshot;
    snapshot.reserve(touched_blocks.size());
    std::span<double> params = model.params();
    for (int m : touched_blocks) {
        std::span<double> block = block_slice(params, layout, m);
        snapshot.emplace_back(block.begin(), block.end());
        std::span<const double> dir = block_slice(direction, layout, m);
        for (size_t i = 0; i < block.size(); ++i) block[i] += mu * dir[i];
    }

    const double loss_plus = model.loss(batch);

    for (size_t k = 0; k < touched_blocks.size(); ++k) {
        std::span<double> block = block_slice(params, layout, touched_blocks[k]);
        std::copy(snapshot[k].begin(), snapshot[k].end(), block.begin());
    }
    return {loss_plus, loss_base};
}

}  // namespace zorba
