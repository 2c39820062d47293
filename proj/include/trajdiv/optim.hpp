#pragma once

#include <map>
#include <string>

#include "trajdiv/array.hpp"
#include "trajdiv/tape.hpp"

namespace trajdiv {

using ParamStore = std::map<std::string, DenseArray>;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // global-norm gradient clip; <= 0 disables
};

// Adam with bias correction. Gradients are clipped by global norm before the
// moment update. Throws if any gradient is non-finite.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // grads may cover a subset of params (e.g. only the generator group);
  // every grads key must exist in params with a matching shape.
  void step(ParamStore& params, const ParamStore& grads);

  std::size_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::map<std::string, DenseArray> m_, v_;
  std::size_t t_ = 0;
};

// Tape leaves for every parameter, in name order.
struct BoundParams {
  std::map<std::string, ad::Var> vars;

  ad::Var at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw std::invalid_argument("unbound parameter: " + name);
    return it->second;
  }
};

BoundParams bind_params(ad::Tape& tape, const ParamStore& params);

// Copies gradients for every bound parameter whose name starts with prefix.
ParamStore collect_grads(const ad::Tape& tape, const BoundParams& bound,
                         const std::string& prefix = "");

}  // namespace trajdiv
