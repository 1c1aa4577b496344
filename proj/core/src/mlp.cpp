#include "samkit/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "samkit/rng.hpp"

namespace samkit {

void MlpSpec::validate() const {
  if (classes < 2) {
    throw std::invalid_argument("MlpSpec: need at least 2 classes, got " +
                                std::to_string(classes));
  }
  if (input_dim < 1) {
    throw std::invalid_argument("MlpSpec: input dimension must be >= 1");
  }
  for (std::size_t h : hidden) {
    if (h < 1) throw std::invalid_argument("MlpSpec: hidden dimensions must be >= 1");
  }
}

ParamVector init_params(const MlpSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  ParamVector params;
  std::vector<std::size_t> dims;
  dims.push_back(spec.input_dim);
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.classes);

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l];
    const std::size_t fan_out = dims[l + 1];
    Array w({fan_in, fan_out});
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : w.data) v = rng.normal() * std_dev;
    params.add("w" + std::to_string(l), std::move(w));
    params.add("b" + std::to_string(l), Array({fan_out}));
  }
  return params;
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)), params_(init_params(spec_)) {}

Value Mlp::forward(Tape& tape, const Array& x) {
  if (x.rank() != 2 || x.cols() != spec_.input_dim) {
    throw std::invalid_argument("Mlp::forward: input shape " + shape_str(x.shape) +
                                " does not match input dimension " +
                                std::to_string(spec_.input_dim));
  }
  const std::size_t layers = spec_.hidden.size() + 1;
  Value h = tape.leaf(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Param& w = params_.at(2 * l);
    Param& b = params_.at(2 * l + 1);
    Value wv = tape.bound_leaf(w.value, &w.grad, &w.has_grad);
    Value bv = tape.bound_leaf(b.value, &b.grad, &b.has_grad);
    h = tape.add(tape.matmul(h, wv), bv);
    if (l + 1 < layers) h = tape.relu(h);
  }
  return h;
}

}  // namespace samkit
