#pragma once

#include <functional>
#include <vector>

#include "gsheaf/autodiff/tape.hpp"

namespace gsheaf::ad {

/// Builds a scalar on `tape` from parameter leaves.
using ScalarFn = std::function<Var(Tape& tape, const std::vector<Var>& params)>;

/// Reverse-mode gradient against central differences over every coordinate.
/// Returns ||a - f||_inf / max(||a||_inf, ||f||_inf, 1e-12).
double grad_check(const ScalarFn& fn, const std::vector<Tensor>& params, double step = 1e-5);

}  // namespace gsheaf::ad
