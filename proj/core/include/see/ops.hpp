#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "see/tensor.hpp"

// Differentiable primitives. Every op takes the tape first; pass nullptr to
// evaluate without recording. An op records a node only when a tape is given
// and at least one operand requires a gradient.
namespace see {

inline constexpr double kLayerNormEps = 1e-5;

enum class Activation { gelu, tanh, relu };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

// [m x k] . [k x n] -> [m x n]
Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape* tape, const Tensor& a);

Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& x, double factor);
Tensor add_scalar(Tape* tape, const Tensor& x, double offset);

// Adds a length-n vector to every row of an [m x n] matrix (or to an [n]
// vector).
Tensor add_bias(Tape* tape, const Tensor& x, const Tensor& bias);

Tensor reshape(Tape* tape, const Tensor& x, Shape shape);
Tensor select_row(Tape* tape, const Tensor& x, std::size_t row);
Tensor slice_cols(Tape* tape, const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_cols(Tape* tape, std::span<const Tensor> parts);
// Flattens and joins, yielding a vector of the total length.
Tensor concat(Tape* tape, std::span<const Tensor> parts);

Tensor sum(Tape* tape, const Tensor& x);
Tensor dot(Tape* tape, const Tensor& a, const Tensor& b);
Tensor abs(Tape* tape, const Tensor& x);

Tensor softmax_rows(Tape* tape, const Tensor& x);
Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = kLayerNormEps);
// Mean over the token (row) axis: [L x d] -> [d].
Tensor mean_pool_tokens(Tape* tape, const Tensor& x);

// Clamped to the open interval (0, 1) so that no threshold in [0, 1] can be
// met with equality by saturation.
Tensor sigmoid(Tape* tape, const Tensor& x);
double sigmoid(double x);
Tensor gelu(Tape* tape, const Tensor& x);
Tensor tanh(Tape* tape, const Tensor& x);
Tensor relu(Tape* tape, const Tensor& x);
Tensor activate(Tape* tape, const Tensor& x, Activation a);

inline constexpr double kBceClamp = 1e-7;

// -[y log p + (1 - y) log(1 - p)] with p clamped to [1e-7, 1 - 1e-7].
Tensor binary_cross_entropy(Tape* tape, const Tensor& prediction, int label);

}  // namespace see
