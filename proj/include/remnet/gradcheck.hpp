#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "remnet/graph.hpp"
#include "remnet/tensor.hpp"

namespace remnet {

struct GradCheckReport {
    std::string op_name;
    std::vector<double> max_rel_err;  // one entry per checked input
    double worst = 0.0;
    double tolerance = 1e-4;
    bool passed = false;
};

// Builds a scalar output from leaf variables; called repeatedly with perturbed
// inputs, so it must be pure.
using ScalarGraphFn = std::function<VarD(std::vector<VarD>&)>;

// Compares reverse-mode gradients against 64-bit central differences.
// Failures are reported in the result, never thrown.
GradCheckReport finite_difference_gradcheck(const std::string& op_name, const ScalarGraphFn& fn,
                                            const std::vector<TensorD>& inputs,
                                            double tolerance = 1e-4, double step = 1e-5);

// The standard op-by-op battery: every differentiable op on `instances` random
// small instances each, seeded deterministically.
std::vector<GradCheckReport> run_standard_gradchecks(std::uint64_t seed, int instances = 5,
                                                     double tolerance = 1e-4);

std::string format_gradcheck_table(const std::vector<GradCheckReport>& reports);

}  // namespace remnet
