#include "trajdiv/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace trajdiv {

void Adam::step(ParamStore& params, const ParamStore& grads) {
  double sq_norm = 0.0;
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("Adam: unknown parameter " + name);
    if (!it->second.same_shape(g)) {
      throw std::invalid_argument("Adam: gradient shape " + g.shape_str() + " does not match " +
                                  name + " " + it->second.shape_str());
    }
    for (std::size_t i = 0; i < g.numel(); ++i) {
      if (!std::isfinite(g[i])) {
        throw std::runtime_error("Adam: non-finite gradient in " + name);
      }
      sq_norm += g[i] * g[i];
    }
  }
  double clip = 1.0;
  if (cfg_.clip_norm > 0.0) {
    const double norm = std::sqrt(sq_norm);
    if (norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (const auto& [name, g] : grads) {
    DenseArray& p = params.at(name);
    auto mit = m_.find(name);
    if (mit == m_.end()) {
      mit = m_.emplace(name, DenseArray(p.shape())).first;
      v_.emplace(name, DenseArray(p.shape()));
    }
    DenseArray& m = mit->second;
    DenseArray& v = v_.at(name);
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double gi = g[i] * clip;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

BoundParams bind_params(ad::Tape& tape, const ParamStore& params) {
  BoundParams out;
  for (const auto& [name, value] : params) out.vars.emplace(name, tape.leaf(value));
  return out;
}

ParamStore collect_grads(const ad::Tape& tape, const BoundParams& bound,
                         const std::string& prefix) {
  ParamStore out;
  for (const auto& [name, var] : bound.vars) {
    if (name.rfind(prefix, 0) == 0) out.emplace(name, tape.grad(var));
  }
  return out;
}

}  // namespace trajdiv
