#pragma once

#include <unordered_map>

#include "nn.hpp"

namespace ar {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a fixed parameter list. Moment state is keyed by parameter name
// so it survives checkpoint round-trips.
class Adam {
 public:
  Adam(ParamList params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {}

  void step();
  void zero_grad();

  int64_t iteration() const { return t_; }
  const ParamList& params() const { return params_; }

  struct Moments {
    std::vector<double> m, v;
  };
  std::unordered_map<std::string, Moments>& state() { return state_; }
  void set_iteration(int64_t t) { t_ = t; }

 private:
  ParamList params_;
  AdamConfig cfg_;
  std::unordered_map<std::string, Moments> state_;
  int64_t t_ = 0;
};

}  // namespace ar
