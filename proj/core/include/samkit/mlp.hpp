#pragma once

#include <cstdint>
#include <vector>

#include "samkit/params.hpp"
#include "samkit/tape.hpp"

namespace samkit {

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t classes = 0;
  std::uint64_t seed = 0;

  void validate() const;  // classes >= 2, every dimension >= 1
};

/// He-style initialization: weights ~ N(0, 2/fan_in), biases zero.
/// Registry order is w0, b0, w1, b1, ... and is deterministic under the seed.
ParamVector init_params(const MlpSpec& spec);

/// Plain feed-forward ReLU classifier recorded on a caller-provided tape.
class Mlp {
 public:
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  /// Logits (n x classes) for a batch of rows; differentiable w.r.t. every
  /// parameter via bound leaves.
  Value forward(Tape& tape, const Array& x);

 private:
  MlpSpec spec_;
  ParamVector params_;
};

}  // namespace samkit
