#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mamp {

// Dense row-major array of doubles. This is the storage type every module
// computes on; shape discipline is enforced by the ops that produce arrays.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> values);

  static DenseArray scalar(double v);
  static DenseArray full(std::vector<std::size_t> shape, double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double& at2(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
  double at2(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }
  double& at3(std::size_t i, std::size_t j, std::size_t k) {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at3(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }

  bool same_shape(const DenseArray& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  // Size-preserving shape change; throws ContractViolation on element-count
  // mismatch.
  DenseArray reshaped(std::vector<std::size_t> new_shape) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

std::size_t shape_product(std::span<const std::size_t> shape);
std::string shape_str(std::span<const std::size_t> shape);

}  // namespace mamp
