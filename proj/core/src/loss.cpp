#include "samkit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace samkit {

namespace {
constexpr double kDenominatorFloor = 1e-12;
}

std::vector<double> softmax_probs(std::span<const double> logits) {
  if (logits.empty()) {
    throw std::invalid_argument("softmax_probs: empty logits row");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - m);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

TargetVector ce_targets(std::size_t true_class, std::size_t class_count) {
  if (true_class >= class_count) {
    throw std::invalid_argument("ce_targets: class " + std::to_string(true_class) +
                                " out of range for K = " + std::to_string(class_count));
  }
  TargetVector t;
  t.tau.assign(class_count, 0.0);
  t.tau[true_class] = 1.0;
  t.kind = TargetKind::CrossEntropy;
  t.true_class = true_class;
  return t;
}

TargetVector aace_targets(std::span<const double> probs, std::size_t true_class) {
  const std::size_t k = probs.size();
  if (true_class >= k) {
    throw std::invalid_argument("aace_targets: class " + std::to_string(true_class) +
                                " out of range for K = " + std::to_string(k));
  }
  if (k < 2) {
    throw std::invalid_argument("aace_targets: need at least 2 classes");
  }
  TargetVector t;
  t.tau.assign(k, 0.0);
  t.kind = TargetKind::Aace;
  t.true_class = true_class;

  double negative_mass = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (i != true_class) negative_mass += probs[i];
  }
  const double denom = std::max(negative_mass, kDenominatorFloor);
  double assigned = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (i == true_class) continue;
    t.tau[i] = probs[i] / denom;
    assigned += t.tau[i];
  }
  if (assigned > 0.0) {
    for (std::size_t i = 0; i < k; ++i) {
      if (i != true_class) t.tau[i] /= assigned;
    }
  } else {
    // Every negative probability underflowed to zero; fall back to uniform so
    // the targets stay a valid distribution.
    const double uniform = 1.0 / static_cast<double>(k - 1);
    for (std::size_t i = 0; i < k; ++i) {
      if (i != true_class) t.tau[i] = uniform;
    }
  }
  return t;
}

Value cross_entropy(Tape& tape, Value logp_row, const TargetVector& target) {
  const Array& lp = logp_row.data();
  const std::size_t k =
      lp.rank() == 2 && lp.rows() == 1 ? lp.cols() : (lp.rank() == 1 ? lp.size() : 0);
  if (k == 0 || k != target.tau.size()) {
    throw std::invalid_argument("cross_entropy: log-prob row shape " + shape_str(lp.shape) +
                                " does not match " + std::to_string(target.tau.size()) +
                                " targets");
  }
  Array coeff(lp.shape, std::vector<double>(target.tau));
  return tape.scale(tape.sum(tape.scale(logp_row, std::move(coeff))), -1.0);
}

Value batch_loss(Tape& tape, Value logits, const std::vector<TargetVector>& targets) {
  const Array& z = logits.data();
  if (targets.empty()) {
    throw std::invalid_argument("batch_loss: empty batch");
  }
  if (z.rank() != 2 || z.rows() != targets.size()) {
    throw std::invalid_argument("batch_loss: logits shape " + shape_str(z.shape) +
                                " does not match " + std::to_string(targets.size()) +
                                " targets");
  }
  Array coeff(z.shape);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].tau.size() != z.cols()) {
      throw std::invalid_argument("batch_loss: target " + std::to_string(i) + " has " +
                                  std::to_string(targets[i].tau.size()) + " classes, logits " +
                                  std::to_string(z.cols()));
    }
    for (std::size_t j = 0; j < z.cols(); ++j) coeff.at(i, j) = targets[i].tau[j];
  }
  Value logp = tape.log_softmax(logits);
  const double inv_n = -1.0 / static_cast<double>(targets.size());
  return tape.scale(tape.sum(tape.scale(logp, std::move(coeff))), inv_n);
}

std::vector<double> logit_grad_oracle(std::span<const double> probs,
                                      const TargetVector& target) {
  if (probs.size() != target.tau.size()) {
    throw std::invalid_argument("logit_grad_oracle: " + std::to_string(probs.size()) +
                                " probabilities vs " + std::to_string(target.tau.size()) +
                                " targets");
  }
  std::vector<double> grad(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) grad[i] = probs[i] - target.tau[i];
  return grad;
}

std::vector<TargetVector> ce_target_batch(std::span<const int> labels, std::size_t class_count) {
  std::vector<TargetVector> targets;
  targets.reserve(labels.size());
  for (int label : labels) {
    targets.push_back(ce_targets(static_cast<std::size_t>(label), class_count));
  }
  return targets;
}

std::vector<TargetVector> aace_target_batch(const Array& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.rows() != labels.size()) {
    throw std::invalid_argument("aace_target_batch: logits shape " + shape_str(logits.shape) +
                                " does not match " + std::to_string(labels.size()) + " labels");
  }
  std::vector<TargetVector> targets;
  targets.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::span<const double> row(logits.data.data() + i * logits.cols(), logits.cols());
    targets.push_back(aace_targets(softmax_probs(row), static_cast<std::size_t>(labels[i])));
  }
  return targets;
}

}  // namespace samkit
