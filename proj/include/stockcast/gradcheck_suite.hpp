#pragma once

#include "stockcast/gradcheck.hpp"

#include <string>
#include <vector>

namespace stockcast {

struct SuiteCheck {
    std::string name;
    GradCheckResult result;
    double tolerance = 0.0;
    bool passed = false;
};

struct SuiteOptions {
    double eps = 1e-5;
    std::uint64_t seed = 20170101;
    /// Test fixture: perturbs the analytic dense weight gradient so the suite must fail.
    bool corrupt_dense_backward = false;
};

/// Finite-difference checks for every kernel (dense, conv1d, maxpool1d, relu,
/// GRU and LSTM cells unrolled over three steps, MSE head) and the four
/// architectures at small widths. Piecewise-linear paths use 1e-6, the rest 1e-4.
std::vector<SuiteCheck> run_gradcheck_suite(const SuiteOptions& options = {});

}  // namespace stockcast
