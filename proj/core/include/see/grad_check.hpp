#pragma once

#include <functional>
#include <span>

#include "see/tensor.hpp"

namespace see {

// Builds a scalar loss from tensors it captures. Receives the tape to record
// on, or nullptr for plain evaluation.
using LossFn = std::function<Tensor(Tape*)>;

// Compares reverse-mode gradients of `loss` against central differences for
// every element of `inputs`, returning
//   max |analytic - numeric| / max(1, |numeric|).
// Inputs must require gradients; their grad buffers are cleared on return.
double grad_check(const LossFn& loss, std::span<Tensor> inputs, double step = 1e-5);

}  // namespace see
