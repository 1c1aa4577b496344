#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "samkit/array.hpp"

namespace samkit {

struct Param {
  std::string name;
  Array value;
  Array grad;  // same shape as value; meaningful only while has_grad is set
  bool has_grad = false;
};

struct ParamSnapshot {
  std::vector<Array> values;
};

/// Ordered registry of named parameter arrays. Flatten order is registry
/// order and is stable for the life of the registry.
class ParamVector {
 public:
  /// Registers a parameter. Names must be unique.
  void add(std::string name, Array value);

  std::size_t count() const { return items_.size(); }
  std::size_t total_size() const { return total_; }
  bool empty() const { return items_.empty(); }

  Param& at(std::size_t i) { return items_[i]; }
  const Param& at(std::size_t i) const { return items_[i]; }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// Concatenation of parameter values in registry order, length P.
  std::vector<double> flatten() const;
  /// Inverse of flatten; writes values back in registry order.
  void unflatten(std::span<const double> flat);

  /// Concatenation of gradients in registry order. Throws if any registered
  /// parameter is missing its gradient.
  std::vector<double> grad_flat() const;
  /// Clears gradients; until the next backward, grad_flat reports them missing.
  void reset_grads();

  ParamSnapshot snapshot() const;
  /// Copies the snapshot back; bit-exact regardless of offsets applied since.
  void restore(const ParamSnapshot& snap);
  /// Adds the unflattened offset elementwise. Length must equal total_size().
  void apply_offset(std::span<const double> offset);

 private:
  std::vector<Param> items_;
  std::size_t total_ = 0;
};

/// Writes values as a flat little-endian float64 blob plus a JSON sidecar
/// ("<blob>.json") listing name and shape per parameter in registry order.
void save_params(const ParamVector& params, const std::filesystem::path& blob_path);
ParamVector load_params(const std::filesystem::path& blob_path);

}  // namespace samkit
