#pragma once

#include <map>
#include <string>

#include "adam.hpp"
#include "tensor.hpp"

#include <json.hpp>

namespace ar {

// Self-describing checkpoint container: JSON metadata, named tensors, and
// optional optimizer moments for exact training resume.
struct Checkpoint {
  nlohmann::json metadata;
  std::map<std::string, Tensor> tensors;
  std::map<std::string, Adam::Moments> opt_state;
  int64_t opt_iteration = -1;  // -1 = no optimizer state stored

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  static Checkpoint from_params(const ParamList& params,
                                nlohmann::json metadata);
  // Copies stored values into matching parameters; every parameter must be
  // present with an identical shape.
  void restore_params(const ParamList& params) const;

  void store_optimizer(const Adam& opt);
  void restore_optimizer(Adam& opt) const;
};

}  // namespace ar
