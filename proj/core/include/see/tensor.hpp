#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace see {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

namespace detail {
struct TensorStorage {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until the first accumulation
  bool requires_grad = false;
};
}  // namespace detail

// Dense row-major array of doubles with an optional gradient buffer.
//
// Tensor is a handle: copies share storage, so a parameter captured by a tape
// node and the same parameter held by the model are one object. Values are
// treated as immutable once an op has produced them; only leaves (parameters
// and inputs) are written through mutable_values().
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(const std::vector<std::vector<double>>& rows,
                       bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(data_); }
  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t size() const { return data_->values.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return data_->values; }
  std::span<double> mutable_values() { return data_->values; }
  double item() const;
  double at(std::size_t i) const { return data_->values[i]; }
  double at(std::size_t r, std::size_t c) const {
    return data_->values[r * data_->shape.back() + c];
  }

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool flag) { data_->requires_grad = flag; }
  bool has_grad() const { return !data_->grad.empty(); }
  std::span<const double> grad() const { return data_->grad; }
  // Allocates a zero gradient on first use.
  std::span<double> grad_buffer() const;
  void zero_grad() { data_->grad.clear(); }

  // Deep copy of values, no gradient, not tracked.
  Tensor detach() const;
  // Deep copy of values and the requires_grad flag.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return data_ == other.data_; }

 private:
  std::shared_ptr<detail::TensorStorage> data_;
};

bool all_finite(const Tensor& t);
bool bitwise_equal(const Tensor& a, const Tensor& b);

// Ordered record of differentiable operations. Nodes are appended as ops
// execute, so the list is topologically sorted by construction.
//
// A tape is single-owner; evaluate independent samples on separate tapes.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded rule in reverse order.
  // Throws DimensionError for a non-scalar loss and StateError when the tape
  // was already consumed.
  void backward(const Tensor& loss);

  void reset();
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace see
