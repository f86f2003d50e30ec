#include "adam.hpp"

#include <cmath>

namespace ar {

void Adam::step() {
  ++t_;
  double b1t = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double b2t = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& p : params_) {
    Tensor t = p.tensor;
    auto& mom = state_[p.name];
    size_t n = t.data().size();
    if (mom.m.size() != n) {
      mom.m.assign(n, 0.0);
      mom.v.assign(n, 0.0);
    }
    auto& g = t.grad();
    auto& x = t.data();
    for (size_t i = 0; i < n; ++i) {
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g[i];
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      double mh = mom.m[i] / b1t;
      double vh = mom.v[i] / b2t;
      x[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace ar
