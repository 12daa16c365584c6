#include "padel/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace padel {

void AdamW::step(
    const std::vector<std::pair<Tensor*, const Tensor*>>& updates) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [param, grad] : updates) {
    if (!param || !grad) throw std::invalid_argument("AdamW: null update");
    if (!param->same_shape(*grad))
      throw std::invalid_argument("AdamW: grad shape " + grad->shape_str() +
                                  " vs param " + param->shape_str());
    Slot& s = slots_[param];
    if (s.m.data.empty()) {
      s.m = Tensor(param->rows, param->cols);
      s.v = Tensor(param->rows, param->cols);
    }
    for (std::size_t i = 0; i < param->data.size(); ++i) {
      const double g = grad->data[i];
      s.m.data[i] = cfg_.beta1 * s.m.data[i] + (1.0 - cfg_.beta1) * g;
      s.v.data[i] = cfg_.beta2 * s.v.data[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = s.m.data[i] / bc1;
      const double vhat = s.v.data[i] / bc2;
      param->data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps) +
                        cfg_.lr * cfg_.weight_decay * param->data[i];
    }
  }
}

}  // namespace padel
