#include "see/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "see/error.hpp"

namespace see {
namespace {

bool tracking(Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

bool tracking_any(Tape* tape, std::span<const Tensor> inputs) {
  if (tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

void require_matrix(const Tensor& x, const char* op) {
  if (x.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_to_string(x.shape()));
  }
}

// out[m x n] += a[m x k] . b[k x n], optionally with either operand transposed
// in place (ta: a is stored [k x m]; tb: b is stored [n x k]).
void gemm_accumulate(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
                     std::size_t n, bool ta, bool tb) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? a[p * m + i] : a[i * k + p];
      if (av == 0.0) continue;
      if (tb) {
        for (std::size_t j = 0; j < n; ++j) row[j] += av * b[j * k + p];
      } else {
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
      }
    }
  }
}

// Elementwise unary op with derivative expressed through input and output.
template <typename Fwd, typename Deriv>
Tensor unary(Tape* tape, const Tensor& x, Fwd fwd, Deriv deriv) {
  std::vector<double> values(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = fwd(xv[i]);
  Tensor out(x.shape(), std::move(values));
  if (tracking(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, deriv]() mutable {
      auto g = out.grad();
      auto xv = x.values();
      auto yv = out.values();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
    });
  }
  return out;
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "gelu") return Activation::gelu;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected gelu, tanh or relu)");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::gelu: return "gelu";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "gelu";
}

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner extents differ, " + shape_to_string(a.shape()) + " . " +
                         shape_to_string(b.shape()));
  }
  std::vector<double> values(m * n, 0.0);
  gemm_accumulate(a.values().data(), b.values().data(), values.data(), m, k, n, false, false);
  Tensor out({m, n}, std::move(values));
  if (tracking(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out, m, k, n]() mutable {
      const double* g = out.grad().data();
      if (a.requires_grad()) {
        // dA = G . B^T
        gemm_accumulate(g, b.values().data(), a.grad_buffer().data(), m, n, k, false, true);
      }
      if (b.requires_grad()) {
        // dB = A^T . G
        gemm_accumulate(a.values().data(), g, b.grad_buffer().data(), k, m, n, true, false);
      }
    });
  }
  return out;
}

Tensor transpose(Tape* tape, const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> values(m * n);
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) values[j * m + i] = av[i * n + j];
  Tensor out({n, m}, std::move(values));
  if (tracking(tape, {&a})) {
    out.set_requires_grad(true);
    tape->record({a}, out, [a, out, m, n]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> values(a.size());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = av[i] + bv[i];
  Tensor out(a.shape(), std::move(values));
  if (tracking(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> values(a.size());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = av[i] - bv[i];
  Tensor out(a.shape(), std::move(values));
  if (tracking(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> values(a.size());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = av[i] * bv[i];
  Tensor out(a.shape(), std::move(values));
  if (tracking(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        auto bv = b.values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        auto av = a.values();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape* tape, const Tensor& x, double factor) {
  return unary(
      tape, x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(Tape* tape, const Tensor& x, double offset) {
  return unary(
      tape, x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor add_bias(Tape* tape, const Tensor& x, const Tensor& bias) {
  const std::size_t n = x.shape().back();
  if (bias.rank() != 1 || bias.size() != n || x.rank() > 2) {
    throw DimensionError("add_bias: cannot broadcast " + shape_to_string(bias.shape()) + " over " +
                         shape_to_string(x.shape()));
  }
  const std::size_t m = x.size() / n;
  std::vector<double> values(x.values().begin(), x.values().end());
  auto bv = bias.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) values[i * n + j] += bv[j];
  Tensor out(x.shape(), std::move(values));
  if (tracking(tape, {&x, &bias})) {
    out.set_requires_grad(true);
    tape->record({x, bias}, out, [x, bias, out, m, n]() mutable {
      auto g = out.grad();
      if (x.requires_grad()) {
        auto gx = x.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      }
    });
  }
  return out;
}

Tensor reshape(Tape* tape, const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_to_string(x.shape()) + " cannot become " +
                         shape_to_string(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()));
  if (tracking(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out]() mutable {
      auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor select_row(Tape* tape, const Tensor& x, std::size_t row) {
  require_matrix(x, "select_row");
  if (row >= x.rows()) {
    throw IndexError("select_row: row " + std::to_string(row) + " out of range for " +
                     shape_to_string(x.shape()));
  }
  const std::size_t n = x.cols();
  auto xv = x.values();
  Tensor out({n}, std::vector<double>(xv.begin() + row * n, xv.begin() + (row + 1) * n));
  if (tracking(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, row, n]() mutable {
      auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t j = 0; j < n; ++j) gx[row * n + j] += g[j];
    });
  }
  return out;
}

Tensor slice_cols(Tape* tape, const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  if (begin >= end || end > x.cols()) {
    throw IndexError("slice_cols: bad column range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") for " + shape_to_string(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols(), w = end - begin;
  std::vector<double> values(m * w);
  auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) values[i * w + j] = xv[i * n + begin + j];
  Tensor out({m, w}, std::move(values));
  if (tracking(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, m, n, w, begin]() mutable {
      auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) gx[i * n + begin + j] += g[i * w + j];
    });
  }
  return out;
}

Tensor concat_cols(Tape* tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row mismatch " + shape_to_string(parts.front().shape()) +
                           " vs " + shape_to_string(p.shape()));
    }
    total += p.cols();
  }
  std::vector<double> values(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    auto pv = p.values();
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) values[i * total + offset + j] = pv[i * w + j];
    offset += w;
  }
  Tensor out({m, total}, std::move(values));
  if (tracking_any(tape, parts)) {
    out.set_requires_grad(true);
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape->record(inputs, out, [inputs, out, m, total]() mutable {
      auto g = out.grad();
      std::size_t offset = 0;
      for (auto& p : inputs) {
        const std::size_t w = p.cols();
        if (p.requires_grad()) {
          auto gp = p.grad_buffer();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[i * total + offset + j];
        }
        offset += w;
      }
    });
  }
  return out;
}

Tensor concat(Tape* tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  std::vector<double> values;
  for (const auto& p : parts) values.insert(values.end(), p.values().begin(), p.values().end());
  Tensor out = Tensor::vector(std::move(values));
  if (tracking_any(tape, parts)) {
    out.set_requires_grad(true);
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape->record(inputs, out, [inputs, out]() mutable {
      auto g = out.grad();
      std::size_t offset = 0;
      for (auto& p : inputs) {
        if (p.requires_grad()) {
          auto gp = p.grad_buffer();
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        }
        offset += p.size();
      }
    });
  }
  return out;
}

Tensor sum(Tape* tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor out = Tensor::scalar(total);
  if (tracking(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out]() mutable {
      const double g = out.grad()[0];
      for (double& v : x.grad_buffer()) v += g;
    });
  }
  return out;
}

Tensor dot(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: length mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  double total = 0.0;
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i] * bv[i];
  Tensor out = Tensor::scalar(total);
  if (tracking(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() mutable {
      const double g = out.grad()[0];
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        auto bv = b.values();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        auto av = a.values();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * av[i];
      }
    });
  }
  return out;
}

Tensor abs(Tape* tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor softmax_rows(Tape* tape, const Tensor& x) {
  require_matrix(x, "softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> values(m * n);
  auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double* out = values.data() + i * n;
    const double peak = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = std::exp(row[j] - peak);
      total += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= total;
  }
  Tensor out({m, n}, std::move(values));
  if (tracking(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, m, n]() mutable {
      auto g = out.grad();
      auto y = out.values();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < n; ++j) inner += g[i * n + j] * y[i * n + j];
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += y[i * n + j] * (g[i * n + j] - inner);
      }
    });
  }
  return out;
}

Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_matrix(x, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (n < 2) throw DimensionError("layer_norm: feature dimension must be at least 2, got " + shape_to_string(x.shape()));
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  if (gamma.size() != n || beta.size() != n) {
    throw DimensionError("layer_norm: affine parameters " + shape_to_string(gamma.shape()) + "/" +
                         shape_to_string(beta.shape()) + " do not match " + shape_to_string(x.shape()));
  }
  std::vector<double> normalized(m * n), inv_std(m), values(m * n);
  auto xv = x.values(), gv = gamma.values(), bv = beta.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      normalized[i * n + j] = (row[j] - mean) * inv_std[i];
      values[i * n + j] = gv[j] * normalized[i * n + j] + bv[j];
    }
  }
  Tensor out({m, n}, std::move(values));
  if (tracking(tape, {&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    tape->record({x, gamma, beta}, out,
                 [x, gamma, beta, out, m, n, normalized = std::move(normalized),
                  inv_std = std::move(inv_std)]() mutable {
                   auto g = out.grad();
                   if (gamma.requires_grad()) {
                     auto gg = gamma.grad_buffer();
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * normalized[i * n + j];
                   }
                   if (beta.requires_grad()) {
                     auto gb = beta.grad_buffer();
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
                   }
                   if (x.requires_grad()) {
                     auto gx = x.grad_buffer();
                     auto gv = gamma.values();
                     const double inv_n = 1.0 / static_cast<double>(n);
                     for (std::size_t i = 0; i < m; ++i) {
                       double mean_d = 0.0, mean_dx = 0.0;
                       for (std::size_t j = 0; j < n; ++j) {
                         const double d = g[i * n + j] * gv[j];
                         mean_d += d;
                         mean_dx += d * normalized[i * n + j];
                       }
                       mean_d *= inv_n;
                       mean_dx *= inv_n;
                       for (std::size_t j = 0; j < n; ++j) {
                         const double d = g[i * n + j] * gv[j];
                         gx[i * n + j] += inv_std[i] * (d - mean_d - normalized[i * n + j] * mean_dx);
                       }
                     }
                   }
                 });
  }
  return out;
}

Tensor mean_pool_tokens(Tape* tape, const Tensor& x) {
  require_matrix(x, "mean_pool_tokens");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> values(n, 0.0);
  auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) values[j] += xv[i * n + j];
  const double inv_m = 1.0 / static_cast<double>(m);
  for (double& v : values) v *= inv_m;
  Tensor out = Tensor::vector(std::move(values));
  if (tracking(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, m, n, inv_m]() mutable {
      auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j] * inv_m;
    });
  }
  return out;
}

double sigmoid(double x) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    y = e / (1.0 + e);
  }
  return std::clamp(y, lo, hi);
}

Tensor sigmoid(Tape* tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor gelu(Tape* tape, const Tensor& x) {
  constexpr double inv_sqrt2 = 0.7071067811865476;
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return unary(
      tape, x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [](double v, double) {
        return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Tensor tanh(Tape* tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(Tape* tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor activate(Tape* tape, const Tensor& x, Activation a) {
  switch (a) {
    case Activation::gelu: return gelu(tape, x);
    case Activation::tanh: return tanh(tape, x);
    case Activation::relu: return relu(tape, x);
  }
  return gelu(tape, x);
}

Tensor binary_cross_entropy(Tape* tape, const Tensor& prediction, int label) {
  if (label != 0 && label != 1) throw LabelError("label must be 0 or 1, got " + std::to_string(label));
  if (prediction.size() != 1) {
    throw DimensionError("binary_cross_entropy: prediction must be scalar, got " +
                         shape_to_string(prediction.shape()));
  }
  const double y = label;
  const double raw = prediction.item();
  const double p = std::clamp(raw, kBceClamp, 1.0 - kBceClamp);
  Tensor out = Tensor::scalar(-(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)));
  if (tracking(tape, {&prediction})) {
    out.set_requires_grad(true);
    const bool clamped = raw != p;
    tape->record({prediction}, out, [prediction, out, y, p, clamped]() mutable {
      if (clamped) return;
      prediction.grad_buffer()[0] += out.grad()[0] * (-y / p + (1.0 - y) / (1.0 - p));
    });
  }
  return out;
}

}  // namespace see
