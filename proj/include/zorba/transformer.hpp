#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "zorba/model.hpp"

namespace zorba {

/// Shape of the forward-only transformer classifier. Kept deliberately tiny
/// so exhaustive sweeps stay cheap.
struct TinyTransformerSpec {
    int vocab = 256;
    int hidden = 32;      // H
    int heads = 2;        // K, must divide hidden
    int blocks = 4;       // M
    int ffn_ratio = 4;    // alpha
    int max_seq_len = 16; // L
    int classes = 4;
    uint64_t init_seed = 1;

    void validate() const;
    /// Trainable parameters per block (attention + FFN + the two norms).
    int64_t block_param_count() const;
};

/// Pre-norm transformer encoder with mean pooling and a linear classifier.
/// Only the M transformer blocks are trainable (they form the flattened
/// parameter vector); embeddings, the final norm and the classifier head are
/// frozen at their seeded initialization.
class TinyTransformerModel final : public Model {
public:
    explicit TinyTransformerModel(const TinyTransformerSpec& spec);

    const BlockLayout& layout() const override { return layout_; }
    std::span<double> params() override { return params_; }
    std::span<const double> params() const override { return params_; }
    double loss(const Batch& batch) const override;
    std::unique_ptr<Model> clone() const override;
    std::string_view backend_name() const override { return "tiny_transformer"; }

    const TinyTransformerSpec& spec() const { return spec_; }
    /// Class logits for one example.
    std::vector<double> logits(const Example& example) const;
    /// Fraction of examples whose argmax logit matches the label.
    double accuracy(const std::vector<Example>& examples) const;

private:
    struct FrozenBuffers {
        std::vector<double> token_embedding;  // vocab x H
        std::vector<double> pos_embedding;    // L x H
        std::vector<double> final_norm_gain;  // H
        std::vector<double> final_norm_bias;  // H
        std::vector<double> head_weight;      // H x classes
        std::vector<double> head_bias;        // classes
    };

    TinyTransformerSpec spec_;
    BlockLayout layout_;
    std::vector<double> params_;
    std::shared_ptr<const FrozenBuffers> frozen_;

    void forward_hidden(const Example& example, std::vector<double>& pooled) const;
};

}  // namespace zorba
