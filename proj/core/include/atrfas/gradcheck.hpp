#pragma once

#include <functional>
#include <vector>

#include "atrfas/ops.hpp"
#include "atrfas/tensor.hpp"

namespace atrfas::nd {

/// Compares reverse-mode gradients of a scalar-valued graph against central
/// finite differences. build_graph receives freshly seeded inputs (one per
/// shape, all requiring grad) and must return a scalar.
///
/// Returns max over all input elements of
///   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
float grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& build_graph,
                 const std::vector<Shape>& shapes, uint64_t seed, float eps);

} // namespace atrfas::nd
