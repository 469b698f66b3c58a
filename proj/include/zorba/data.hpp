#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zorba/model.hpp"

namespace zorba {

/// One client's local shard plus the seed that drives its batch draws.
struct ClientDataset {
    std::vector<Example> examples;
    uint64_t sampling_seed = 0;

    /// B examples drawn without replacement (all of them when B >= size),
    /// deterministic in (sampling_seed, round). Throws if the shard is empty.
    Batch make_batch(int round, int batch_size) const;
};

enum class SyntheticKind {
    Blobs,   // Gaussian-blob feature vectors, one blob per class
    Tokens,  // random token sequences with class-signature tokens mixed in
};

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::Blobs;
    int classes = 4;
    int size = 1000;
    uint64_t seed = 0;
    // Blobs
    int features = 16;
    double center_spread = 5.0;
    // Tokens
    int vocab = 256;
    int seq_len = 16;
    double signal = 0.5;  // probability a position carries a class-signature token
};

/// Balanced labeled dataset, deterministic from the seed. Blobs are unit
/// Gaussians around well-separated class centers; token sequences mix
/// uniform noise with tokens from a per-class signature range.
std::vector<Example> make_synthetic_classification(const SyntheticSpec& spec);

/// Non-IID split: per-class proportions across clients drawn from a
/// symmetric Dirichlet. The shards are disjoint, cover the dataset, and are
/// repaired so no client ends up empty. Throws if the dataset has fewer
/// examples than clients.
std::vector<ClientDataset> dirichlet_partition(const std::vector<Example>& dataset,
                                               int num_clients, double concentration,
                                               uint64_t seed);

/// JSON-lines loader. Accepts {"x": [...], "label": n} rows as feature
/// vectors and {"text": "...", "label": n} rows as whitespace-tokenized text
/// hashed into [0, vocab).
std::vector<Example> load_jsonl(const std::string& path, int vocab, int max_seq_len);

/// Gamma(shape, 1) draw; used by the Dirichlet split. Marsaglia-Tsang, with
/// the standard boost for shape < 1.
double sample_gamma(SplitMix64& rng, double shape);

}  // namespace zorba
