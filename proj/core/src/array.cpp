#include "mamp/array.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "mamp/error.hpp"

namespace mamp {

std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(std::span<const std::size_t> shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

DenseArray::DenseArray(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_product(shape_), 0.0) {}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_product(shape_)) {
    throw ContractViolation("DenseArray: " + std::to_string(values_.size()) +
                            " values do not fill shape " + shape_str(shape_));
  }
}

DenseArray DenseArray::scalar(double v) { return DenseArray({1}, {v}); }

DenseArray DenseArray::full(std::vector<std::size_t> shape, double v) {
  DenseArray out(std::move(shape));
  for (double& x : out.values_) x = v;
  return out;
}

bool DenseArray::all_finite() const {
  for (double x : values_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

DenseArray DenseArray::reshaped(std::vector<std::size_t> new_shape) const {
  if (shape_product(new_shape) != values_.size()) {
    throw ContractViolation("reshape " + shape_str(shape_) + " -> " +
                            shape_str(new_shape) + " changes element count");
  }
  return DenseArray(std::move(new_shape), values_);
}

}  // namespace mamp
