#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace zorba {

/// M x N binary matrix deciding which client perturbs and updates which
/// block. Rows are blocks, columns are clients. Every valid matrix has at
/// least one 1 in each row and in each column.
class ActivationMatrix {
public:
    ActivationMatrix() = default;
    ActivationMatrix(int blocks, int clients)
        : blocks_(blocks), clients_(clients),
          bits_(static_cast<size_t>(blocks) * static_cast<size_t>(clients), 0) {}

    static ActivationMatrix all_ones(int blocks, int clients);
    /// Rows given as 0/1 vectors, e.g. {{1,1,0},{0,1,1}}.
    static ActivationMatrix from_rows(const std::vector<std::vector<int>>& rows);
    /// Rows given as compact strings, e.g. {"110", "011"}.
    static ActivationMatrix from_row_strings(const std::vector<std::string>& rows);

    int blocks() const { return blocks_; }
    int clients() const { return clients_; }

    uint8_t at(int block, int client) const {
        return bits_[static_cast<size_t>(block) * static_cast<size_t>(clients_) +
                     static_cast<size_t>(client)];
    }
    void set(int block, int client, bool active) {
        bits_[static_cast<size_t>(block) * static_cast<size_t>(clients_) +
              static_cast<size_t>(client)] = active ? 1 : 0;
    }

    std::span<const uint8_t> row(int block) const {
        return {bits_.data() + static_cast<size_t>(block) * static_cast<size_t>(clients_),
                static_cast<size_t>(clients_)};
    }
    /// Copy of column n (client n's activation vector over blocks).
    std::vector<uint8_t> column(int client) const;

    int row_sum(int block) const;
    int col_sum(int client) const;
    int total_active() const;

    /// Throws std::invalid_argument naming the first all-zero row or column.
    void validate() const;

    bool operator==(const ActivationMatrix& other) const = default;

private:
    int blocks_ = 0;
    int clients_ = 0;
    std::vector<uint8_t> bits_;
};

/// Popularity statistics of an activation matrix: per-block activator counts,
/// per-client least popularity, and the latter sorted descending.
struct PopularityProfile {
    std::vector<int> block_popularity;         // c_m, length M
    std::vector<int> least_popularity;         // per client, length N
    std::vector<int> least_popularity_sorted;  // descending
};

/// Throws on invalid matrices (zero row/column), naming the offending index.
PopularityProfile popularity(const ActivationMatrix& A);

/// Convergence-bias surrogate: sum over clients of 1 / least_popularity^2.
double lambda_value(const ActivationMatrix& A);

/// Same quantity via the aggregation weights: sum over clients of
/// max over blocks of (a_{m,n} / row_sum_m)^2. Agrees with lambda_value to
/// floating-point roundoff; kept as an independent route for checking.
double lambda_weight_form(const ActivationMatrix& A);

/// Lambda of a least-popularity vector directly (entries must be >= 1).
double lambda_from_least_popularity(std::span<const int> least_popularity);

/// True iff x is majorized by y: after descending sort, every prefix sum of
/// x is <= the corresponding prefix sum of y, and the totals are equal.
/// Throws std::invalid_argument on length mismatch.
bool majorizes(std::span<const int> x, std::span<const int> y);

}  // namespace zorba
