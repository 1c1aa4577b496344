#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "samkit/data.hpp"
#include "samkit/mlp.hpp"

namespace samkit {

/// Perturbation-generating rules for the two-pass step.
///   None       - plain SGD, no perturbation pass.
///   SamCeNorm  - normalized gradient of the one-hot cross-entropy loss.
///   AaceNorm   - negated normalized gradient of the adversarial loss.
///   AaceRaw    - negated raw gradient of the adversarial loss; its magnitude
///                tracks the gradient instead of staying pinned at rho.
enum class PerturbKind { None, SamCeNorm, AaceNorm, AaceRaw };

std::string_view kind_name(PerturbKind kind);
std::optional<PerturbKind> parse_kind(std::string_view name);
double default_rho(PerturbKind kind);

struct PerturbStrategy {
  PerturbKind kind = PerturbKind::None;
  double rho = 0.0;

  void validate() const;  // rho > 0 for every kind except None
};

struct Perturbation {
  std::vector<double> values;  // flat, length P
  PerturbKind kind = PerturbKind::None;
  double norm = 0.0;
  bool skipped = false;  // normalized kind hit the vanishing-gradient guard
};

struct SgdState {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::vector<Array> velocity;  // lazily sized to the parameter shapes
};

struct StepTelemetry {
  std::optional<double> perturb_loss;
  std::optional<double> perturb_grad_norm;
  std::optional<double> perturb_distance;
  double train_loss = 0.0;  // loss the update gradient was taken from
  double batch_accuracy = 0.0;
};

/// Diagnostic hook: receives copies of the perturbation-pass gradient and the
/// generated epsilon.
struct StepProbe {
  std::vector<double> grad;
  Perturbation eps;
};

/// Builds epsilon from the perturbation-pass gradient. Normalized kinds fall
/// back to a zero vector (skip flag set) when the gradient norm is below
/// 1e-12. Rejects kind None.
Perturbation gen_epsilon(const PerturbStrategy& strategy, std::span<const double> grad_flat);

/// g' = g + wd * w; v = momentum * v + g'; w -= lr * v.
void sgd_update(ParamVector& params, SgdState& state);

/// Step schedule: base * 0.2^k where k counts the crossed thresholds at 30%,
/// 60% and 80% of the run (epoch >= ceil(threshold * total)).
double lr_at(std::size_t epoch, std::size_t total_epochs, double base_lr);

/// One optimization step. For perturbed kinds: perturbation loss and gradient
/// at the current weights, offset by epsilon, training loss and gradient at
/// the offset point, restore, SGD update with the offset-point gradient. For
/// kind None only the plain pass and update run.
StepTelemetry sam_step(Mlp& model, const Batch& batch, const PerturbStrategy& strategy,
                       SgdState& state, StepProbe* probe = nullptr);

}  // namespace samkit
