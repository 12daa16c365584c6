#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "padel/tensor.hpp"

namespace padel {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

// AdamW with decoupled weight decay:
//   m ← β₁m + (1−β₁)g,  v ← β₂v + (1−β₂)g²
//   p ← p − lr·m̂/(√v̂+ε) − lr·wd·p
// Moment slots are keyed by parameter address; step count is global so bias
// correction is shared across all parameters updated in one step() call.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  // One optimization step over the given (parameter, gradient) pairs.
  void step(const std::vector<std::pair<Tensor*, const Tensor*>>& updates);

  std::size_t step_count() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  struct Slot {
    Tensor m, v;
  };
  AdamWConfig cfg_;
  std::unordered_map<Tensor*, Slot> slots_;
  std::size_t t_ = 0;
};

}  // namespace padel
