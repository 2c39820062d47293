#include "trajdiv/array.hpp"

#include <cmath>

namespace trajdiv {

void DenseArray::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw std::runtime_error("non-finite value at flat index " + std::to_string(i) +
                               " of array " + shape_str());
    }
  }
}

}  // namespace trajdiv
