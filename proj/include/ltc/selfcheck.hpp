#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ltc {

// Finite-difference suite over every loss and a small network trained in
// ltc mode. Instances whose hinge or |·| terms sit within 1e-4 of a kink,
// whose ReLU pre-activations are that close to zero, or whose nonzero
// analytic entries are below 1e-5 are redrawn.
struct SuiteOptions {
    std::uint64_t seed = 0;
    std::size_t instances = 20;
    double step = 1e-5;
    double tol = 1e-5;
    // Negative control: flips the sign of the largest analytic cross-entropy
    // gradient entry in the first instance.
    bool perturb = false;
};

struct SuiteRow {
    std::string name;  // ce, mse, triplet, corr, network
    std::size_t instances = 0;
    std::size_t redrawn = 0;
    double max_rel_err = 0.0;
    bool passed = true;
};

std::vector<SuiteRow> gradient_suite(const SuiteOptions& opts);

} // namespace ltc
