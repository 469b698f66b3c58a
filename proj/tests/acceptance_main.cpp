// Acceptance suite: one binary, one criterion per invocation (or all).
// Prints a single pass/fail line per criterion and exits nonzero on failure.

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "zorba/verify.hpp"

namespace {

std::string golden_path() {
    return std::string(ZORBA_GOLDEN_DIR) + "/allocator_gaps.csv";
}

zorba::verify::CheckResult run_criterion(int n, bool update_golden) {
    using namespace zorba::verify;
    switch (n) {
        case 1: return theorem4_exactness();
        case 2: return allocator_quality(golden_path(), update_golden);
        case 3: return schur_convexity();
        case 4: return bias_monotonicity();
        case 5: return norm_inflation();
        case 6: return gradient_bias_bound();
        case 7: return protocol_exactness();
        case 8: return decomfl_equivalence();
        case 9: return convergence_ordering();
        case 10: return pareto_front_shape();
        default: throw std::invalid_argument("criterion must be 1..10");
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> criteria;
    bool update_golden = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            criteria.push_back(std::atoi(argv[++i]));
        } else if (std::strcmp(argv[i], "--update-golden") == 0) {
            update_golden = true;
        } else {
            std::cerr << "usage: zorba_acceptance [--criterion N]... [--update-golden]\n";
            return 2;
        }
    }
    if (criteria.empty())
        for (int n = 1; n <= 10; ++n) criteria.push_back(n);

    bool all_passed = true;
    for (int n : criteria) {
        zorba::verify::CheckResult result;
        try {
            result = run_criterion(n, update_golden);
        } catch (const std::exception& e) {
            result.passed = false;
            result.detail = std::string("exception: ") + e.what();
        }
        std::cout << (result.passed ? "[PASS]" : "[FAIL]") << " criterion " << n << ": "
                  << result.detail << std::endl;
        all_passed = all_passed && result.passed;
    }
    return all_passed ? 0 : 1;
}
