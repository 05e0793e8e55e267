#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "see/grad_check.hpp"
#include "see/tensor.hpp"

namespace see {

// One finite-difference check: a scalar loss and the tensors it is
// differentiated against.
struct GradCase {
  std::string name;
  std::vector<Tensor> inputs;
  LossFn loss;
};

// Every autodiff primitive plus the composed decoder block, the assessor,
// the classifier and the three training losses, drawn from `seed`.
std::vector<GradCase> gradient_cases(std::uint64_t seed);

// A scale-by-two op whose backward rule returns the negated gradient. Exists
// so callers can confirm the gradient suite catches a broken rule.
Tensor faulty_double(Tape* tape, const Tensor& x);
GradCase faulty_gradient_case(std::uint64_t seed);

struct VerifyOptions {
  std::size_t gradient_seeds = 20;
  double gradient_tolerance = 1e-4;
  std::size_t inference_pairs = 1000;
  std::size_t metric_instances = 200;
  std::size_t roundtrip_cases = 8;
  std::uint64_t seed = 0;
  bool inject_fault = false;  // adds faulty_gradient_case to the gradient suite
};

struct SuiteResult {
  std::string name;
  std::size_t passed = 0;
  std::size_t total = 0;
  std::vector<std::string> failures;  // first few failure descriptions

  bool ok() const { return passed == total; }
};

struct VerifyReport {
  std::vector<SuiteResult> suites;
  bool ok() const;
};

SuiteResult verify_gradients(const VerifyOptions& options);
SuiteResult verify_inference(const VerifyOptions& options);
SuiteResult verify_roundtrips(const VerifyOptions& options);
SuiteResult verify_metrics(const VerifyOptions& options);
SuiteResult verify_monotonicity(const VerifyOptions& options);

VerifyReport run_verification(const VerifyOptions& options);

// suite=gradients passed=...  total=... status=PASS, then failure lines.
void write_report(std::ostream& out, const VerifyReport& report);

}  // namespace see
