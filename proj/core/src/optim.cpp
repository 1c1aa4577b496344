#include "samkit/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "samkit/errors.hpp"
#include "samkit/loss.hpp"

namespace samkit {

namespace {
constexpr double kGradNormFloor = 1e-12;
}

std::string_view kind_name(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::None: return "sgd";
    case PerturbKind::SamCeNorm: return "sam_ce_norm";
    case PerturbKind::AaceNorm: return "aace_norm";
    case PerturbKind::AaceRaw: return "aace_raw";
  }
  return "unknown";
}

std::optional<PerturbKind> parse_kind(std::string_view name) {
  if (name == "sgd" || name == "none") return PerturbKind::None;
  if (name == "sam" || name == "sam_ce_norm") return PerturbKind::SamCeNorm;
  if (name == "aace_norm") return PerturbKind::AaceNorm;
  if (name == "aace" || name == "aace_raw") return PerturbKind::AaceRaw;
  return std::nullopt;
}

double default_rho(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::None: return 0.0;
    case PerturbKind::SamCeNorm: return 0.05;
    case PerturbKind::AaceNorm: return 0.5;
    case PerturbKind::AaceRaw: return 0.2;
  }
  return 0.0;
}

void PerturbStrategy::validate() const {
  if (kind != PerturbKind::None && !(rho > 0.0)) {
    throw std::invalid_argument("PerturbStrategy: rho must be positive for kind " +
                                std::string(kind_name(kind)));
  }
}

Perturbation gen_epsilon(const PerturbStrategy& strategy, std::span<const double> grad_flat) {
  if (strategy.kind == PerturbKind::None) {
    throw std::invalid_argument("gen_epsilon: kind 'sgd' defines no perturbation");
  }
  strategy.validate();

  Perturbation eps;
  eps.kind = strategy.kind;
  eps.values.assign(grad_flat.begin(), grad_flat.end());

  const double grad_norm = l2_norm(grad_flat);
  double factor = 0.0;
  switch (strategy.kind) {
    case PerturbKind::SamCeNorm:
    case PerturbKind::AaceNorm: {
      if (grad_norm < kGradNormFloor) {
        eps.values.assign(grad_flat.size(), 0.0);
        eps.norm = 0.0;
        eps.skipped = true;
        return eps;
      }
      factor = strategy.rho / grad_norm;
      if (strategy.kind == PerturbKind::AaceNorm) factor = -factor;
      break;
    }
    case PerturbKind::AaceRaw:
      factor = -strategy.rho;
      break;
    case PerturbKind::None:
      break;  // unreachable
  }
  for (double& v : eps.values) v *= factor;
  eps.norm = l2_norm(eps.values);
  return eps;
}

void sgd_update(ParamVector& params, SgdState& state) {
  if (state.velocity.empty()) {
    state.velocity.reserve(params.count());
    for (const Param& p : params) state.velocity.emplace_back(p.value.shape);
  }
  if (state.velocity.size() != params.count()) {
    throw std::invalid_argument("sgd_update: velocity buffers do not match the registry");
  }
  for (std::size_t i = 0; i < params.count(); ++i) {
    Param& p = params.at(i);
    if (!p.has_grad) {
      throw std::logic_error("sgd_update: parameter '" + p.name + "' has no gradient");
    }
    Array& v = state.velocity[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad.data[j] + state.weight_decay * p.value.data[j];
      v.data[j] = state.momentum * v.data[j] + g;
      p.value.data[j] -= state.lr * v.data[j];
    }
  }
}

double lr_at(std::size_t epoch, std::size_t total_epochs, double base_lr) {
  if (epoch >= total_epochs) {
    throw std::invalid_argument("lr_at: epoch " + std::to_string(epoch) +
                                " outside run of " + std::to_string(total_epochs));
  }
  // thresholds at ceil(0.3/0.6/0.8 * total), computed in exact integers
  int crossed = 0;
  for (std::size_t tenths : {std::size_t{3}, std::size_t{6}, std::size_t{8}}) {
    const std::size_t boundary = (tenths * total_epochs + 9) / 10;
    if (epoch >= boundary) ++crossed;
  }
  double lr = base_lr;
  for (int i = 0; i < crossed; ++i) lr *= 0.2;
  return lr;
}

namespace {

double batch_accuracy_of(const Array& logits, std::span<const int> labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j) {
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    }
    if (static_cast<int>(best) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace

StepTelemetry sam_step(Mlp& model, const Batch& batch, const PerturbStrategy& strategy,
                       SgdState& state, StepProbe* probe) {
  strategy.validate();
  if (batch.labels.empty()) {
    throw std::invalid_argument("sam_step: empty batch");
  }
  ParamVector& params = model.params();
  StepTelemetry telemetry;

  if (strategy.kind != PerturbKind::None) {
    // pass 1: perturbation loss and gradient at the current weights
    params.reset_grads();
    Tape tape;
    Value logits = model.forward(tape, batch.x);
    const auto targets = strategy.kind == PerturbKind::SamCeNorm
                             ? ce_target_batch(batch.labels, model.spec().classes)
                             : aace_target_batch(logits.data(), batch.labels);
    Value loss = batch_loss(tape, logits, targets);
    if (!std::isfinite(loss.item())) {
      throw NumericalAbort("non-finite perturbation loss");
    }
    tape.backward(loss);
    const std::vector<double> grad = params.grad_flat();

    Perturbation eps = gen_epsilon(strategy, grad);
    telemetry.perturb_loss = loss.item();
    telemetry.perturb_grad_norm = l2_norm(grad);
    telemetry.perturb_distance = eps.norm;
    if (probe != nullptr) {
      probe->grad = grad;
      probe->eps = eps;
    }

    // pass 2: training loss and gradient at the offset point, update at the
    // original weights
    const ParamSnapshot snap = params.snapshot();
    params.apply_offset(eps.values);
    params.reset_grads();
    Tape update_tape;
    Value update_logits = model.forward(update_tape, batch.x);
    Value update_loss =
        batch_loss(update_tape, update_logits, ce_target_batch(batch.labels, model.spec().classes));
    if (!std::isfinite(update_loss.item())) {
      params.restore(snap);
      throw NumericalAbort("non-finite training loss at the perturbed point");
    }
    update_tape.backward(update_loss);
    params.restore(snap);

    telemetry.train_loss = update_loss.item();
    telemetry.batch_accuracy = batch_accuracy_of(update_logits.data(), batch.labels);
  } else {
    params.reset_grads();
    Tape tape;
    Value logits = model.forward(tape, batch.x);
    Value loss = batch_loss(tape, logits, ce_target_batch(batch.labels, model.spec().classes));
    if (!std::isfinite(loss.item())) {
      throw NumericalAbort("non-finite training loss");
    }
    tape.backward(loss);
    telemetry.train_loss = loss.item();
    telemetry.batch_accuracy = batch_accuracy_of(logits.data(), batch.labels);
  }

  sgd_update(params, state);
  return telemetry;
}

}  // namespace samkit
