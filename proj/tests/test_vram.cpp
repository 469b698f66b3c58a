#include <doctest.h>

#include <stdexcept>

#include "zorba/vram.hpp"

using namespace zorba;

TEST_SUITE_BEGIN("vram");

namespace {
ArchConfig make_arch(int64_t alpha, int64_t heads, int64_t B, int64_t L, int64_t H, int M) {
    ArchConfig arch;
    arch.ffn_ratio = alpha;
    arch.heads = heads;
    arch.batch_size = B;
    arch.seq_len = L;
    arch.hidden = H;
    arch.blocks = M;
    return arch;
}
}  // namespace

TEST_CASE("per-block activation cost") {
    CHECK(block_activation_cost(make_arch(4, 2, 1, 4, 8, 4)) == 352.0);
    CHECK(block_activation_cost(make_arch(4, 12, 8, 128, 768, 12)) == 32243712.0);
    // degenerate head count: hidden + FFN terms only
    CHECK(block_activation_cost(make_arch(4, 0, 1, 4, 8, 4)) == 5.0 * 32.0);
}

TEST_CASE("total usage is model plus active blocks") {
    const ArchConfig arch = make_arch(4, 2, 1, 4, 8, 4);  // block cost 352
    const std::vector<uint8_t> none(4, 0);
    const std::vector<uint8_t> all(4, 1);
    CHECK(total_usage(none, arch, 1000.0) == 1000.0);
    CHECK(total_usage(all, arch, 1000.0) == 1000.0 + 4 * 352.0);

    const ArchConfig arch12 = make_arch(4, 2, 1, 4, 8, 12);
    const std::vector<uint8_t> twelve(12, 1);
    CHECK(total_usage(twelve, arch12, 500.0) == 500.0 + 12 * 352.0);

    ArchConfig small = make_arch(4, 2, 1, 4, 8, 8);
    // force block cost 50: (alpha + 3K + 1) * BLH = 50 via alpha=43, K=2, BLH=1
    small = make_arch(43, 2, 1, 1, 1, 8);
    CHECK(block_activation_cost(small) == 50.0);
    std::vector<uint8_t> five(8, 0);
    for (int i = 0; i < 5; ++i) five[static_cast<size_t>(i)] = 1;
    CHECK(total_usage(five, small, 1000.0) == 1250.0);

    // each extra block moves usage by exactly the block cost
    const double step = block_activation_cost(arch);
    std::vector<uint8_t> column(4, 0);
    double previous = total_usage(column, arch, 777.0);
    for (int k = 0; k < 4; ++k) {
        column[static_cast<size_t>(k)] = 1;
        const double current = total_usage(column, arch, 777.0);
        CHECK(current - previous == step);
        previous = current;
    }
}

TEST_CASE("activation budgets") {
    const ArchConfig arch = make_arch(43, 2, 1, 1, 1, 8);  // block cost 50
    CHECK(activation_budget(1000.0, 400.0, 100.0, arch).value == doctest::Approx(10.0));
    CHECK(activation_budget(1000.0, 400.0, 75.0, arch).value == doctest::Approx(10.5));

    const BudgetResult boundary = activation_budget(1000.0, 400.0, 600.0, arch);
    CHECK(boundary.value == 0.0);
    CHECK(boundary.feasible);

    const BudgetResult negative = activation_budget(1000.0, 400.0, 700.0, arch);
    CHECK(negative.value == 0.0);
    CHECK_FALSE(negative.feasible);

    // budget strictly decreasing in epsilon
    double previous = activation_budget(1000.0, 400.0, 0.0, arch).value;
    for (double eps = 50.0; eps <= 500.0; eps += 50.0) {
        const double current = activation_budget(1000.0, 400.0, eps, arch).value;
        CHECK(current < previous);
        previous = current;
    }
}

TEST_CASE("profile validation") {
    const ArchConfig arch = make_arch(43, 2, 1, 1, 1, 8);  // block cost 50
    VramProfile profile;
    profile.psi_md = 400.0;
    profile.psi_max = {450.0, 1000.0};
    CHECK_NOTHROW(profile.validate(arch));
    profile.psi_max[0] = 449.0;
    CHECK_THROWS_AS(profile.validate(arch), std::invalid_argument);
}

TEST_SUITE_END();
