#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "padel/rng.hpp"

namespace padel {

// Dense row-major matrix of 64-bit floats. Plain value type: parameters,
// constants and gradients are all Tensors; differentiation lives in tape.hpp.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols)
      throw std::invalid_argument("Tensor: value count does not match shape");
  }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }
  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }

  static Tensor full(std::size_t r, std::size_t c, double v) {
    return Tensor(r, c, v);
  }
  static Tensor identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }
  static Tensor row(std::initializer_list<double> v) {
    return Tensor(1, v.size(), std::vector<double>(v));
  }
  // Fan-based uniform init in ±sqrt(6/(fan_in+fan_out)).
  static Tensor xavier_uniform(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t(r, c);
    const double bound = std::sqrt(6.0 / static_cast<double>(r + c));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
  }
  static Tensor gaussian(std::size_t r, std::size_t c, Rng& rng,
                         double stddev = 1.0) {
    Tensor t(r, c);
    for (double& v : t.data) v = rng.normal(0.0, stddev);
    return t;
  }
};

inline bool all_finite(const Tensor& t) {
  for (double v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

// Named handle to a parameter tensor; used by the optimizer and checkpoints.
struct NamedParam {
  std::string name;
  Tensor* tensor = nullptr;
};

}  // namespace padel
