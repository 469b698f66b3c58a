#include "zorba/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace zorba {

double GaussianStream::next() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * rng_.uniform01() - 1.0;
        v = 2.0 * rng_.uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

void GaussianStream::fill(std::span<double> out) noexcept {
    for (double& x : out) x = next();
}

BlockLayout::BlockLayout(std::vector<int64_t> dims) : block_dims(std::move(dims)) {
    if (block_dims.empty()) throw std::invalid_argument("BlockLayout: need at least one block");
    offsets.resize(block_dims.size());
    int64_t off = 0;
    for (size_t m = 0; m < block_dims.size(); ++m) {
        if (block_dims[m] < 1)
            throw std::invalid_argument("BlockLayout: block " + std::to_string(m) +
                                        " has non-positive dimension");
        offsets[m] = off;
        off += block_dims[m];
    }
    d = off;
}

SeedPool SeedPool::derive(uint64_t master, int count) {
    if (count < 1) throw std::invalid_argument("SeedPool: count must be >= 1");
    SeedPool pool;
    pool.master_seed = master;
    pool.seeds.reserve(static_cast<size_t>(count));
    std::unordered_set<uint64_t> seen;
    SplitMix64 rng(SplitMix64::hash(master, 0x5eedULL));
    while (pool.seeds.size() < static_cast<size_t>(count)) {
        const uint64_t s = rng.next();
        if (seen.insert(s).second) pool.seeds.push_back(s);
    }
    return pool;
}

PerturbationVector generate_perturbation(uint64_t seed, const BlockLayout& layout,
                                         PerturbationMode mode) {
    PerturbationVector v;
    v.seed = seed;
    v.mode = mode;
    v.values.resize(static_cast<size_t>(layout.d));
    GaussianStream stream(seed);
    stream.fill(v.values);
    if (mode == PerturbationMode::UnitSphere) {
        double norm_sq = 0.0;
        for (double x : v.values) norm_sq += x * x;
        const double norm = std::sqrt(norm_sq);
        // A zero draw has probability zero; guard anyway.
        if (norm > 0.0) {
            for (double& x : v.values) x /= norm;
        } else {
            v.values[0] = 1.0;
        }
    }
    return v;
}

std::vector<uint64_t> select_round_seeds(const SeedPool& pool, int round, int Q) {
    const size_t P = pool.seeds.size();
    if (Q < 1 || static_cast<size_t>(Q) > P)
        throw std::invalid_argument("select_round_seeds: Q=" + std::to_string(Q) +
                                    " outside [1, P=" + std::to_string(P) + "]");
    std::vector<size_t> idx(P);
    std::iota(idx.begin(), idx.end(), size_t{0});
    SplitMix64 rng(SplitMix64::hash(pool.master_seed, static_cast<uint64_t>(round)));
    std::vector<uint64_t> out(static_cast<size_t>(Q));
    for (int i = 0; i < Q; ++i) {
        const size_t j = static_cast<size_t>(i) + rng.bounded(P - static_cast<size_t>(i));
        std::swap(idx[static_cast<size_t>(i)], idx[j]);
        out[static_cast<size_t>(i)] = pool.seeds[idx[static_cast<size_t>(i)]];
    }
    return out;
}

namespace {
void check_block_index(const BlockLayout& layout, int m) {
    if (m < 0 || m >= layout.num_blocks())
        throw std::out_of_range("block_slice: block index " + std::to_string(m) +
                                " outside [0, " + std::to_string(layout.num_blocks()) + ")");
}
}  // namespace

std::span<const double> block_slice(const PerturbationVector& v, const BlockLayout& layout,
                                    int m) {
    return block_slice(std::span<const double>(v.values), layout, m);
}

std::span<double> block_slice(std::span<double> values, const BlockLayout& layout, int m) {
    check_block_index(layout, m);
    return values.subspan(static_cast<size_t>(layout.offsets[static_cast<size_t>(m)]),
                          static_cast<size_t>(layout.block_dims[static_cast<size_t>(m)]));
}

std::span<const double> block_slice(std::span<const double> values, const BlockLayout& layout,
                                    int m) {
    check_block_index(layout, m);
    return values.subspan(static_cast<size_t>(layout.offsets[static_cast<size_t>(m)]),
                          static_cast<size_t>(layout.block_dims[static_cast<size_t>(m)]));
}

}  // namespace zorba
