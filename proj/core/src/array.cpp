#include "samkit/array.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace samkit {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

Array::Array(Shape s) : shape(std::move(s)), data(numel(shape), 0.0) {}

Array::Array(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != numel(shape)) {
    throw std::invalid_argument("Array: " + std::to_string(data.size()) +
                                " values do not fill shape " + shape_str(shape));
  }
}

Array Array::scalar(double v) { return Array({1}, {v}); }

std::size_t Array::rows() const {
  assert(rank() == 2);
  return shape[0];
}

std::size_t Array::cols() const {
  assert(rank() == 2);
  return shape[1];
}

void Array::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace samkit
