#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace zorba {

/// Architecture constants of the fine-tuned model. Units below are abstract
/// parameter-elements; byte conversion is a reporting concern.
struct ArchConfig {
    int64_t batch_size = 8;    // B
    int64_t seq_len = 16;      // L
    int64_t hidden = 32;       // H
    int64_t heads = 2;         // K
    int64_t ffn_ratio = 4;     // alpha
    int blocks = 4;            // M

    void validate() const {
        if (batch_size < 1 || seq_len < 1 || hidden < 1 || heads < 0 || blocks < 1)
            throw std::invalid_argument("ArchConfig: sizes must be positive");
        if (ffn_ratio < 1) throw std::invalid_argument("ArchConfig: ffn_ratio must be >= 1");
    }
};

/// Activation footprint of one active block: hidden states BLH, the Q/K/V
/// projections 3KBLH, and the FFN expansion alpha*BLH.
inline double block_activation_cost(const ArchConfig& arch) {
    arch.validate();
    const double blh = static_cast<double>(arch.batch_size) *
                       static_cast<double>(arch.seq_len) * static_cast<double>(arch.hidden);
    return (static_cast<double>(arch.ffn_ratio) + 3.0 * static_cast<double>(arch.heads) + 1.0) *
           blh;
}

/// Total client footprint: resident parameters plus activations of the
/// activated blocks.
inline double total_usage(std::span<const uint8_t> activation_column, const ArchConfig& arch,
                          double psi_md) {
    if (static_cast<int>(activation_column.size()) != arch.blocks)
        throw std::invalid_argument("total_usage: activation column length != block count");
    int active = 0;
    for (uint8_t a : activation_column) active += (a != 0);
    return psi_md + block_activation_cost(arch) * static_cast<double>(active);
}

struct BudgetResult {
    double value = 0.0;  // real-valued block budget, not floored
    bool feasible = true;
};

/// How many blocks a client can afford after reserving psi_md and giving up
/// epsilon of its capacity. Kept real-valued; callers floor where an integer
/// count is needed.
inline BudgetResult activation_budget(double psi_max, double psi_md, double epsilon,
                                      const ArchConfig& arch) {
    if (psi_max < psi_md)
        throw std::invalid_argument("activation_budget: capacity below model size");
    const double numer = psi_max - psi_md - epsilon;
    if (numer < 0.0) return {0.0, false};
    return {numer / block_activation_cost(arch), true};
}

/// Per-client VRAM capacities and reduction targets.
struct VramProfile {
    double psi_md = 0.0;            // model-parameter footprint, shared by all clients
    std::vector<double> psi_max;    // capacity per client
    std::vector<double> epsilon;    // requested reduction per client (may be empty)

    int num_clients() const { return static_cast<int>(psi_max.size()); }

    /// Every client must be able to hold the model plus one block.
    void validate(const ArchConfig& arch) const {
        const double block = block_activation_cost(arch);
        for (size_t n = 0; n < psi_max.size(); ++n) {
            if (psi_max[n] < psi_md + block)
                throw std::invalid_argument("VramProfile: client " + std::to_string(n) +
                                            " cannot activate a single block");
        }
        for (double e : epsilon)
            if (e < 0.0) throw std::invalid_argument("VramProfile: negative epsilon");
    }
};

}  // namespace zorba
