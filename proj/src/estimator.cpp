#include "zorba/estimator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace zorba {

FiniteDifference finite_difference(Model& model, std::span<const uint8_t> activation_mask,
                                   const PerturbationVector& v, double mu, const Batch& batch,
                                   int client, int round, DiffScheme scheme,
                                   MaskMode mask_mode) {
    const BlockLayout& layout = model.layout();
    if (static_cast<int>(activation_mask.size()) != layout.num_blocks())
        throw std::invalid_argument("finite_difference: mask length != block count");
    if (static_cast<int64_t>(v.values.size()) != layout.d)
        throw std::invalid_argument("finite_difference: perturbation dimension mismatch");

    std::vector<int> touched;
    touched.reserve(activation_mask.size());
    for (int m = 0; m < layout.num_blocks(); ++m)
        if (mask_mode == MaskMode::FullVector || activation_mask[static_cast<size_t>(m)])
            touched.push_back(m);

    double rho;
    if (scheme == DiffScheme::Forward) {
        const auto [plus, base] = perturb_eval_restore(model, touched, v.values, mu, batch);
        rho = (plus - base) / mu;
    } else {
        const auto [plus, base_a] = perturb_eval_restore(model, touched, v.values, mu, batch);
        (void)base_a;
        std::vector<double> negated(v.values.size());
        for (size_t i = 0; i < negated.size(); ++i) negated[i] = -v.values[i];
        const auto [minus, base_b] = perturb_eval_restore(model, touched, negated, mu, batch);
        (void)base_b;
        rho = (plus - minus) / (2.0 * mu);
    }
    if (!std::isfinite(rho))
        throw std::runtime_error("finite_difference: non-finite rho (round " +
                                 std::to_string(round) + ", client " + std::to_string(client) +
                                 ")");
    return {v.seed, rho, client, round};
}

std::vector<double> estimate_block_gradient(std::span<const FiniteDifference> diffs,
                                            std::span<const PerturbationVector> perturbations,
                                            const BlockLayout& layout, int block) {
    if (diffs.empty() || diffs.size() != perturbations.size())
        throw std::invalid_argument("estimate_block_gradient: need equal, non-empty inputs");
    for (size_t q = 0; q < diffs.size(); ++q)
        if (diffs[q].seed != perturbations[q].seed)
            throw std::invalid_argument("estimate_block_gradient: seed misalignment at index " +
                                        std::to_string(q));
    const double inv_q = 1.0 / static_cast<double>(diffs.size());
    std::span<const double> first = block_slice(perturbations[0], layout, block);
    std::vector<double> grad(first.size(), 0.0);
    for (size_t q = 0; q < diffs.size(); ++q) {
        std::span<const double> slice = block_slice(perturbations[q], layout, block);
        for (size_t i = 0; i < grad.size(); ++i) grad[i] += diffs[q].rho * slice[i];
    }
    for (double& g : grad) g *= inv_q;
    return grad;
}

}  // namespace zorba
