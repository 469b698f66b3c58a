#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace zorba {

/// Pinned pseudo-random generator used for every randomized decision in the
/// simulator: perturbation vectors, seed subset selection, data synthesis,
/// Dirichlet partitioning.
///
/// The whole client/server protocol rests on all parties regenerating
/// identical vectors from an exchanged 64-bit seed, so the generator and the
/// Gaussian transform below are version-locked: their output must never
/// change across releases. SplitMix64 (Steele, Lea, Flood 2014): 64-bit
/// state, golden-gamma increment, 2^64 period, passes BigCrush.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(uint64_t seed) noexcept : state_(seed) {}

    constexpr uint64_t next() noexcept {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Stateless mix of (key, value). Used to derive per-round and
    /// per-client streams from a master seed without correlating them.
    static constexpr uint64_t hash(uint64_t key, uint64_t value) noexcept {
        uint64_t z = key ^ (value + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform01() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Plain modulo; the (negligible) bias is
    /// acceptable, the fixed reduction rule is what matters.
    uint64_t bounded(uint64_t n) noexcept { return next() % n; }

private:
    uint64_t state_;
};

/// Standard-normal stream over SplitMix64 via the Marsaglia polar method.
/// Rejection is deterministic for a fixed seed, and each accepted pair
/// yields two draws (the spare is cached).
class GaussianStream {
public:
    explicit GaussianStream(uint64_t seed) noexcept : rng_(seed) {}

    double next() noexcept;

    /// Fill `out` with iid standard-normal draws.
    void fill(std::span<double> out) noexcept;

private:
    SplitMix64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Partition of the flattened d-dimensional parameter vector into M
/// contiguous blocks.
struct BlockLayout {
    std::vector<int64_t> block_dims;
    std::vector<int64_t> offsets;
    int64_t d = 0;

    BlockLayout() = default;
    /// Throws std::invalid_argument if dims is empty or any dim < 1.
    explicit BlockLayout(std::vector<int64_t> dims);

    int num_blocks() const { return static_cast<int>(block_dims.size()); }
};

enum class PerturbationMode {
    UnitSphere,   // Gaussian draw normalized to ||v|| = 1 (protocol default)
    RawGaussian,  // unnormalized iid N(0,1) coordinates
};

/// A direction vector regenerable from (seed, layout, mode) alone.
struct PerturbationVector {
    uint64_t seed = 0;
    PerturbationMode mode = PerturbationMode::UnitSphere;
    std::vector<double> values;
};

/// The P candidate seeds all parties agree on before fine-tuning starts,
/// plus the master seed that drives per-round subset selection.
struct SeedPool {
    std::vector<uint64_t> seeds;
    uint64_t master_seed = 0;

    /// Derive a pool of `count` distinct seeds from `master`.
    static SeedPool derive(uint64_t master, int count);
};

/// d iid standard-normal draws seeded by `seed`, optionally normalized onto
/// the unit sphere. Bit-identical across calls and across simulated parties.
PerturbationVector generate_perturbation(uint64_t seed, const BlockLayout& layout,
                                         PerturbationMode mode);

/// Q distinct seeds drawn without replacement from the pool, deterministic
/// in (pool.master_seed, round). Partial Fisher-Yates keyed by
/// hash(master_seed, round). Throws std::invalid_argument if Q > P or Q < 1.
std::vector<uint64_t> select_round_seeds(const SeedPool& pool, int round, int Q);

/// Contiguous slice of v for block m. Throws std::out_of_range on bad m.
std::span<const double> block_slice(const PerturbationVector& v,
                                    const BlockLayout& layout, int m);
std::span<double> block_slice(std::span<double> values, const BlockLayout& layout, int m);
std::span<const double> block_slice(std::span<const double> values,
                                    const BlockLayout& layout, int m);

}  // namespace zorba
