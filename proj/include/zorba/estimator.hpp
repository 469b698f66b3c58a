#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zorba/model.hpp"
#include "zorba/rng.hpp"

namespace zorba {

/// Directional loss difference along one perturbation, keyed so records can
/// be matched back to (round, client, seed) in traces.
struct FiniteDifference {
    uint64_t seed = 0;
    double rho = 0.0;
    int client = 0;
    int round = 0;
};

enum class DiffScheme {
    Forward,  // (F(w + mu v) - F(w)) / mu, the protocol form
    Central,  // (F(w + mu v) - F(w - mu v)) / (2 mu), ablation only
};

enum class MaskMode {
    ActivatedOnly,  // zero the perturbation on frozen blocks (default)
    FullVector,     // perturb every block regardless of activation
};

/// Loss difference along v scaled by 1/mu. The perturbation is masked to the
/// client's activated blocks (unless MaskMode::FullVector), applied via
/// perturb_eval_restore, and the parameters come back bit-identical.
/// Throws on non-finite results.
FiniteDifference finite_difference(Model& model, std::span<const uint8_t> activation_mask,
                                   const PerturbationVector& v, double mu, const Batch& batch,
                                   int client = 0, int round = 0,
                                   DiffScheme scheme = DiffScheme::Forward,
                                   MaskMode mask_mode = MaskMode::ActivatedOnly);

/// Block-m slice of the averaged estimate: (1/Q) * sum_q rho_q * v_{q,m}.
/// The diffs and perturbations must align one-to-one by seed.
std::vector<double> estimate_block_gradient(std::span<const FiniteDifference> diffs,
                                            std::span<const PerturbationVector> perturbations,
                                            const BlockLayout& layout, int block);

}  // namespace zorba
