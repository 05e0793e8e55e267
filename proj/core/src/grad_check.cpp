#include "see/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "see/error.hpp"

namespace see {

double grad_check(const LossFn& loss, std::span<Tensor> inputs, double step) {
  if (!(step > 0.0)) throw ConfigError("grad_check: step must be positive");
  for (auto& t : inputs) t.zero_grad();

  Tape tape;
  Tensor out = loss(&tape);
  tape.backward(out);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& t : inputs) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.size(), 0.0);
    }
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto values = inputs[i].mutable_values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + step;
      const double plus = loss(nullptr).item();
      values[j] = saved - step;
      const double minus = loss(nullptr).item();
      values[j] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = std::fabs(analytic[i][j] - numeric) / std::max(1.0, std::fabs(numeric));
      worst = std::max(worst, err);
    }
  }
  for (auto& t : inputs) t.zero_grad();
  return worst;
}

}  // namespace see
