#pragma once

#include <span>
#include <vector>

#include "samkit/tape.hpp"

namespace samkit {

enum class TargetKind { CrossEntropy, Aace };

/// Per-sample target distribution over the classes. CrossEntropy targets are
/// one-hot on the true class. Aace targets are adversarial: zero on the true
/// class, the other classes weighted by their renormalized predicted
/// probability, detached from the graph.
struct TargetVector {
  std::vector<double> tau;
  TargetKind kind = TargetKind::CrossEntropy;
  std::size_t true_class = 0;
};

/// Max-subtracted softmax of one logits row.
std::vector<double> softmax_probs(std::span<const double> logits);

TargetVector ce_targets(std::size_t true_class, std::size_t class_count);

/// Adversarial targets from detached probabilities: tau_t = 0 and
/// tau_i = q_i / max(sum_{j != t} q_j, 1e-12) renormalized, i != t.
/// The caller is responsible for passing probabilities with no gradient
/// history (plain numbers qualify).
TargetVector aace_targets(std::span<const double> probs, std::size_t true_class);

/// -sum_i tau_i * logp_i over one row of log-probabilities; tau is constant.
Value cross_entropy(Tape& tape, Value logp_row, const TargetVector& target);

/// Mean per-sample cross-entropy over a batch. `logits` is (n x K) raw
/// logits; targets holds one TargetVector per row.
Value batch_loss(Tape& tape, Value logits, const std::vector<TargetVector>& targets);

/// Closed-form gradient of the loss w.r.t. the logits when targets are held
/// constant: q - tau, elementwise.
std::vector<double> logit_grad_oracle(std::span<const double> probs, const TargetVector& target);

std::vector<TargetVector> ce_target_batch(std::span<const int> labels, std::size_t class_count);

/// Fresh adversarial targets from the detached softmax of each logits row.
std::vector<TargetVector> aace_target_batch(const Array& logits, std::span<const int> labels);

}  // namespace samkit
