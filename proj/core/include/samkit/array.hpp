#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace samkit {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);  // e.g. "(2, 3)"

/// Dense row-major array of doubles. Rank 1 and 2 are what the primitives use.
struct Array {
  Shape shape;
  std::vector<double> data;

  Array() = default;
  explicit Array(Shape s);
  Array(Shape s, std::vector<double> d);

  static Array scalar(double v);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  bool same_shape(const Array& other) const { return shape == other.shape; }
  void fill(double v);
};

bool all_finite(std::span<const double> v);
double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace samkit
