#include "zorba/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace zorba {

Batch ClientDataset::make_batch(int round, int batch_size) const {
    if (examples.empty()) throw std::invalid_argument("ClientDataset: empty shard");
    if (batch_size < 1) throw std::invalid_argument("ClientDataset: batch size must be >= 1");
    const uint64_t key = SplitMix64::hash(sampling_seed, static_cast<uint64_t>(round));
    SplitMix64 rng(key);
    const size_t take = std::min(static_cast<size_t>(batch_size), examples.size());
    std::vector<size_t> idx(examples.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    Batch batch;
    batch.items.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        const size_t j = i + rng.bounded(idx.size() - i);
        std::swap(idx[i], idx[j]);
        batch.items.push_back(examples[idx[i]]);
    }
    batch.xi_seed = SplitMix64::hash(key, 0xba7c4ULL);
    return batch;
}

double sample_gamma(SplitMix64& rng, double shape) {
    if (shape <= 0.0) throw std::invalid_argument("sample_gamma: shape must be positive");
    if (shape < 1.0) {
        const double u = rng.uniform01();
        return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    GaussianStream normals(rng.next());
    for (;;) {
        double x, v;
        do {
            x = normals.next();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<Example> make_synthetic_classification(const SyntheticSpec& spec) {
    if (spec.size <= 0) throw std::invalid_argument("make_synthetic_classification: size <= 0");
    if (spec.classes < 2)
        throw std::invalid_argument("make_synthetic_classification: need >= 2 classes");

    std::vector<Example> out;
    out.reserve(static_cast<size_t>(spec.size));

    if (spec.kind == SyntheticKind::Blobs) {
        if (spec.features < 1)
            throw std::invalid_argument("make_synthetic_classification: features < 1");
        std::vector<std::vector<double>> centers(static_cast<size_t>(spec.classes));
        for (int c = 0; c < spec.classes; ++c) {
            GaussianStream g(SplitMix64::hash(spec.seed, 0xc000ULL + static_cast<uint64_t>(c)));
            centers[static_cast<size_t>(c)].resize(static_cast<size_t>(spec.features));
            for (double& v : centers[static_cast<size_t>(c)])
                v = spec.center_spread * g.next();
        }
        GaussianStream noise(SplitMix64::hash(spec.seed, 0x0b0bULL));
        for (int i = 0; i < spec.size; ++i) {
            Example ex;
            ex.label = i % spec.classes;
            ex.features.resize(static_cast<size_t>(spec.features));
            const auto& center = centers[static_cast<size_t>(ex.label)];
            for (int j = 0; j < spec.features; ++j)
                ex.features[static_cast<size_t>(j)] =
                    center[static_cast<size_t>(j)] + noise.next();
            out.push_back(std::move(ex));
        }
        return out;
    }

    // Token sequences: class c owns the signature range
    // [c * span, (c+1) * span) with span = vocab / (2 * classes); the other
    // half of the vocabulary is shared noise.
    if (spec.vocab < 2 * spec.classes)
        throw std::invalid_argument("make_synthetic_classification: vocab too small");
    if (spec.seq_len < 1)
        throw std::invalid_argument("make_synthetic_classification: seq_len < 1");
    const int span = spec.vocab / (2 * spec.classes);
    SplitMix64 rng(SplitMix64::hash(spec.seed, 0x70cULL));
    for (int i = 0; i < spec.size; ++i) {
        Example ex;
        ex.label = i % spec.classes;
        ex.tokens.resize(static_cast<size_t>(spec.seq_len));
        const int base = ex.label * span;
        for (int t = 0; t < spec.seq_len; ++t) {
            if (rng.uniform01() < spec.signal) {
                ex.tokens[static_cast<size_t>(t)] =
                    base + static_cast<int>(rng.bounded(static_cast<uint64_t>(span)));
            } else {
                const int noise_base = spec.vocab / 2;
                ex.tokens[static_cast<size_t>(t)] =
                    noise_base +
                    static_cast<int>(rng.bounded(static_cast<uint64_t>(spec.vocab - noise_base)));
            }
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<ClientDataset> dirichlet_partition(const std::vector<Example>& dataset,
                                               int num_clients, double concentration,
                                               uint64_t seed) {
    if (num_clients < 1) throw std::invalid_argument("dirichlet_partition: need >= 1 client");
    if (concentration <= 0.0)
        throw std::invalid_argument("dirichlet_partition: concentration must be positive");
    if (dataset.size() < static_cast<size_t>(num_clients))
        throw std::invalid_argument("dirichlet_partition: dataset smaller than client count");

    std::vector<ClientDataset> shards(static_cast<size_t>(num_clients));
    for (int n = 0; n < num_clients; ++n)
        shards[static_cast<size_t>(n)].sampling_seed =
            SplitMix64::hash(seed, 0xd47aULL + static_cast<uint64_t>(n));

    if (num_clients == 1) {
        shards[0].examples = dataset;
        return shards;
    }

    // Group example indices by label, shuffle within each group.
    int max_label = 0;
    for (const Example& ex : dataset) max_label = std::max(max_label, ex.label);
    std::vector<std::vector<size_t>> by_class(static_cast<size_t>(max_label) + 1);
    for (size_t i = 0; i < dataset.size(); ++i)
        by_class[static_cast<size_t>(dataset[i].label)].push_back(i);

    SplitMix64 rng(SplitMix64::hash(seed, 0xd112ULL));
    for (auto& group : by_class) {
        for (size_t i = 0; i + 1 < group.size(); ++i) {
            const size_t j = i + rng.bounded(group.size() - i);
            std::swap(group[i], group[j]);
        }
    }

    // Per class: Dirichlet proportions over clients, counts via largest
    // remainder so each class is fully assigned.
    for (const auto& group : by_class) {
        if (group.empty()) continue;
        std::vector<double> weights(static_cast<size_t>(num_clients));
        double total = 0.0;
        for (double& w : weights) {
            w = sample_gamma(rng, concentration);
            total += w;
        }
        const auto group_size = static_cast<double>(group.size());
        std::vector<size_t> counts(static_cast<size_t>(num_clients), 0);
        std::vector<std::pair<double, int>> remainders;
        size_t assigned = 0;
        for (int n = 0; n < num_clients; ++n) {
            const double share = group_size * weights[static_cast<size_t>(n)] / total;
            counts[static_cast<size_t>(n)] = static_cast<size_t>(std::floor(share));
            assigned += counts[static_cast<size_t>(n)];
            remainders.emplace_back(share - std::floor(share), n);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (size_t k = 0; assigned < group.size(); ++k, ++assigned)
            counts[static_cast<size_t>(remainders[k % remainders.size()].second)] += 1;

        size_t cursor = 0;
        for (int n = 0; n < num_clients; ++n) {
            for (size_t k = 0; k < counts[static_cast<size_t>(n)]; ++k)
                shards[static_cast<size_t>(n)].examples.push_back(dataset[group[cursor++]]);
        }
    }

    // Repair empty shards by taking one example from the largest shard.
    for (int n = 0; n < num_clients; ++n) {
        while (shards[static_cast<size_t>(n)].examples.empty()) {
            int donor = 0;
            for (int m = 1; m < num_clients; ++m)
                if (shards[static_cast<size_t>(m)].examples.size() >
                    shards[static_cast<size_t>(donor)].examples.size())
                    donor = m;
            if (shards[static_cast<size_t>(donor)].examples.size() <= 1)
                throw std::runtime_error("dirichlet_partition: cannot repair empty shard");
            shards[static_cast<size_t>(n)].examples.push_back(
                shards[static_cast<size_t>(donor)].examples.back());
            shards[static_cast<size_t>(donor)].examples.pop_back();
        }
    }
    return shards;
}

std::vector<Example> load_jsonl(const std::string& path, int vocab, int max_seq_len) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_jsonl: cannot open " + path);
    std::vector<Example> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line);
        Example ex;
        if (!row.contains("label"))
            throw std::runtime_error("load_jsonl: missing label at line " +
                                     std::to_string(line_no));
        ex.label = row["label"].get<int>();
        if (row.contains("x")) {
            ex.features = row["x"].get<std::vector<double>>();
        } else if (row.contains("text")) {
            std::istringstream words(row["text"].get<std::string>());
            std::string word;
            while (static_cast<int>(ex.tokens.size()) < max_seq_len && words >> word) {
                uint64_t h = 0xcbf29ce484222325ULL;
                for (char c : word) h = (h ^ static_cast<uint8_t>(c)) * 0x100000001b3ULL;
                ex.tokens.push_back(static_cast<int>(h % static_cast<uint64_t>(vocab)));
            }
            if (ex.tokens.empty()) ex.tokens.push_back(0);
        } else {
            throw std::runtime_error("load_jsonl: row needs 'x' or 'text' at line " +
                                     std::to_string(line_no));
        }
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace zorba
