#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajdiv {

// Row-major dense array of doubles, rank 1 or 2. Values are checked finite
// at construction so a NaN/Inf anywhere in a pipeline fails at the op that
// produced it instead of poisoning downstream results.
class DenseArray {
 public:
  DenseArray() = default;

  explicit DenseArray(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

  DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_numel(shape_)) {
      throw std::invalid_argument("DenseArray: data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_str());
    }
    check_finite();
  }

  static DenseArray scalar(double v) { return DenseArray({1}, {v}); }

  static DenseArray zeros(std::size_t rows, std::size_t cols) { return DenseArray({rows, cols}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }

  // Matrix view: rank-1 arrays count as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const DenseArray& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

  void check_finite() const;

  void fill(double v) {
    for (auto& x : data_) x = v;
  }

 private:
  static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
    if (shape.empty() || shape.size() > 2) {
      throw std::invalid_argument("DenseArray: rank must be 1 or 2");
    }
    std::size_t n = 1;
    for (auto d : shape) {
      if (d == 0) throw std::invalid_argument("DenseArray: zero dimension");
      n *= d;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace trajdiv
