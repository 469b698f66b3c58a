#include "zorba/activation.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>

namespace zorba {

ActivationMatrix ActivationMatrix::all_ones(int blocks, int clients) {
    ActivationMatrix A(blocks, clients);
    std::fill(A.bits_.begin(), A.bits_.end(), uint8_t{1});
    return A;
}

ActivationMatrix ActivationMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty()) throw std::invalid_argument("ActivationMatrix: no rows");
    const int N = static_cast<int>(rows.front().size());
    ActivationMatrix A(static_cast<int>(rows.size()), N);
    for (size_t m = 0; m < rows.size(); ++m) {
        if (static_cast<int>(rows[m].size()) != N)
            throw std::invalid_argument("ActivationMatrix: ragged rows");
        for (int n = 0; n < N; ++n) {
            const int v = rows[m][static_cast<size_t>(n)];
            if (v != 0 && v != 1) throw std::invalid_argument("ActivationMatrix: entries must be 0/1");
            A.set(static_cast<int>(m), n, v == 1);
        }
    }
    return A;
}

ActivationMatrix ActivationMatrix::from_row_strings(const std::vector<std::string>& rows) {
    std::vector<std::vector<int>> parsed;
    parsed.reserve(rows.size());
    for (const std::string& r : rows) {
        std::vector<int> row;
        row.reserve(r.size());
        for (char c : r) {
            if (c != '0' && c != '1')
                throw std::invalid_argument("ActivationMatrix: row strings must be 0/1");
            row.push_back(c - '0');
        }
        parsed.push_back(std::move(row));
    }
    return from_rows(parsed);
}

std::vector<uint8_t> ActivationMatrix::column(int client) const {
    std::vector<uint8_t> col(static_cast<size_t>(blocks_));
    for (int m = 0; m < blocks_; ++m) col[static_cast<size_t>(m)] = at(m, client);
    return col;
}

int ActivationMatrix::row_sum(int block) const {
    int s = 0;
    for (uint8_t b : row(block)) s += b;
    return s;
}

int ActivationMatrix::col_sum(int client) const {
    int s = 0;
    for (int m = 0; m < blocks_; ++m) s += at(m, client);
    return s;
}

int ActivationMatrix::total_active() const {
    int s = 0;
    for (uint8_t b : bits_) s += b;
    return s;
}

void ActivationMatrix::validate() const {
    if (blocks_ < 1 || clients_ < 1)
        throw std::invalid_argument("ActivationMatrix: empty matrix");
    for (int n = 0; n < clients_; ++n)
        if (col_sum(n) == 0)
            throw std::invalid_argument("ActivationMatrix: client " + std::to_string(n) +
                                        " activates no block");
    for (int m = 0; m < blocks_; ++m)
        if (row_sum(m) == 0)
            throw std::invalid_argument("ActivationMatrix: block " + std::to_string(m) +
                                        " has no activator");
}

PopularityProfile popularity(const ActivationMatrix& A) {
    A.validate();
    PopularityProfile p;
    p.block_popularity.resize(static_cast<size_t>(A.blocks()));
    for (int m = 0; m < A.blocks(); ++m) p.block_popularity[static_cast<size_t>(m)] = A.row_sum(m);

    p.least_popularity.resize(static_cast<size_t>(A.clients()));
    for (int n = 0; n < A.clients(); ++n) {
        int least = std::numeric_limits<int>::max();
        for (int m = 0; m < A.blocks(); ++m)
            if (A.at(m, n))
                least = std::min(least, p.block_popularity[static_cast<size_t>(m)]);
        p.least_popularity[static_cast<size_t>(n)] = least;
    }
    p.least_popularity_sorted = p.least_popularity;
    std::sort(p.least_popularity_sorted.begin(), p.least_popularity_sorted.end(),
              std::greater<int>());
    return p;
}

double lambda_value(const ActivationMatrix& A) {
    const PopularityProfile p = popularity(A);
    return lambda_from_least_popularity(p.least_popularity);
}

double lambda_weight_form(const ActivationMatrix& A) {
    A.validate();
    std::vector<int> c(static_cast<size_t>(A.blocks()));
    for (int m = 0; m < A.blocks(); ++m) c[static_cast<size_t>(m)] = A.row_sum(m);
    double sum = 0.0;
    for (int n = 0; n < A.clients(); ++n) {
        double best = 0.0;
        for (int m = 0; m < A.blocks(); ++m) {
            const double w = static_cast<double>(A.at(m, n)) /
                             static_cast<double>(c[static_cast<size_t>(m)]);
            best = std::max(best, w * w);
        }
        sum += best;
    }
    return sum;
}

double lambda_from_least_popularity(std::span<const int> least_popularity) {
    // Summed in sorted order so the value depends only on the multiset;
    // permuting clients changes nothing, not even the last bit.
    std::vector<int> sorted(least_popularity.begin(), least_popularity.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (int c : sorted) {
        if (c < 1)
            throw std::invalid_argument("lambda_from_least_popularity: entries must be >= 1");
        sum += 1.0 / (static_cast<double>(c) * static_cast<double>(c));
    }
    return sum;
}

bool majorizes(std::span<const int> x, std::span<const int> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("majorizes: vectors must have equal length");
    std::vector<int> xs(x.begin(), x.end()), ys(y.begin(), y.end());
    std::sort(xs.begin(), xs.end(), std::greater<int>());
    std::sort(ys.begin(), ys.end(), std::greater<int>());
    long long px = 0, py = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        px += xs[i];
        py += ys[i];
        if (px > py) return false;
    }
    return px == py;
}

}  // namespace zorba
