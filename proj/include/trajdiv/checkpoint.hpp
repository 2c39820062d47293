#pragma once

#include <string>

#include "trajdiv/optim.hpp"

namespace trajdiv {

// Text checkpoint, one (name, shape, values) record per parameter:
//
//   trajdiv-checkpoint v1
//   meta <single-line JSON>
//   params <count>
//   <name> <rank> <dim0> [dim1]
//   <values, space separated, %.17g>
//
// Values round-trip exactly; writing the same store twice produces
// byte-identical files.
void save_checkpoint(const std::string& path, const ParamStore& params, const std::string& meta_json);

struct Checkpoint {
  ParamStore params;
  std::string meta_json;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace trajdiv
