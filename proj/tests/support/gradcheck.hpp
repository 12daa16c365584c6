#pragma once

// Test-only oracle: central-difference gradients of a scalar forward
// function. Re-runs the forward with perturbed inputs, so it stays
// independent of the tape's backward rules.

#include <cmath>
#include <functional>
#include <vector>

#include "padel/tensor.hpp"

namespace padel::testing {

using ForwardFn = std::function<double(const std::vector<Tensor>&)>;

inline Tensor numeric_gradient(const ForwardFn& f, std::vector<Tensor> params,
                               std::size_t target, double h = 1e-5) {
  Tensor grad(params[target].rows, params[target].cols);
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    const double orig = params[target].data[i];
    params[target].data[i] = orig + h;
    const double fp = f(params);
    params[target].data[i] = orig - h;
    const double fm = f(params);
    params[target].data[i] = orig;
    grad.data[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Mixed absolute/relative comparison: |a - n| <= tol * max(1, |n|) per entry.
inline bool gradients_match(const Tensor& analytic, const Tensor& numeric,
                            double tol, double* worst = nullptr) {
  if (!analytic.same_shape(numeric)) return false;
  double w = 0.0;
  for (std::size_t i = 0; i < analytic.data.size(); ++i) {
    const double err = std::abs(analytic.data[i] - numeric.data[i]) /
                       std::max(1.0, std::abs(numeric.data[i]));
    w = std::max(w, err);
  }
  if (worst) *worst = w;
  return w <= tol;
}

}  // namespace padel::testing
