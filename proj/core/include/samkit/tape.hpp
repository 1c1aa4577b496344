#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "samkit/array.hpp"

namespace samkit {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid for the tape's lifetime.
class Value {
 public:
  Value() = default;

  const Array& data() const;
  /// Gradient of the last backward root w.r.t. this node. Throws if backward
  /// has not populated it.
  const Array& grad() const;
  bool requires_grad() const;
  const Shape& shape() const;
  /// Value of a single-element node.
  double item() const;
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Value(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape over dense double arrays. A tape is built
/// fresh for every forward pass; backward sweeps it once in reverse order.
///
/// Gradient contract: leaf gradients accumulate across backward calls until
/// explicitly reset by the caller. Interior node gradients are scratch and
/// reset on every backward.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Value leaf(Array data, bool requires_grad = false);
  /// Parameter leaf: backward accumulates its gradient into `grad_sink` and
  /// sets `grad_flag`. Both must outlive the tape. Always requires grad.
  Value bound_leaf(const Array& data, Array* grad_sink, bool* grad_flag);

  /// Elementwise add; also accepts (n, m) + (m) with the vector broadcast
  /// across rows.
  Value add(Value a, Value b);
  /// Elementwise subtract, identical shapes.
  Value sub(Value a, Value b);
  /// Multiply by a constant scalar. The constant carries no gradient.
  Value scale(Value a, double c);
  /// Multiply elementwise by a constant array of identical shape.
  Value scale(Value a, Array coeff);
  /// (n, k) x (k, m) matrix product, or the dot product of two equal-length
  /// rank-1 values (producing a scalar).
  Value matmul(Value a, Value b);
  Value relu(Value a);
  /// Row-wise log-softmax over the last axis, computed with max subtraction.
  /// Accepts (n, k) or a single rank-1 row.
  Value log_softmax(Value a);
  /// Picks one entry per row: out[i] = a[i, classes[i]]. Input (n, k).
  Value gather_class(Value a, std::vector<std::size_t> classes);
  Value mean(Value a);
  Value sum(Value a);
  /// Passes data through, blocks all gradient flow. The result does not
  /// require grad and records no dependence on its input.
  Value stop_grad(Value a);

  /// Populates gradients of every requires-grad node at or before the root.
  /// The root must be a single-element value.
  void backward(Value root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class Value;

  enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kScale,
    kMatmul,
    kRelu,
    kLogSoftmax,
    kGatherClass,
    kMean,
    kSum,
    kStopGrad,
  };

  struct Node {
    Array data;
    Array grad;  // lazily allocated by backward
    Op op = Op::kLeaf;
    std::array<std::size_t, 2> in{0, 0};
    int arity = 0;
    bool requires_grad = false;
    bool grad_ready = false;
    Array coeff;                       // kScale
    std::vector<std::size_t> classes;  // kGatherClass
    Array* grad_sink = nullptr;        // bound leaves
    bool* grad_flag = nullptr;
  };

  Value push(Node node);
  const Node& node(std::size_t id) const { return nodes_[id]; }
  Node& node(std::size_t id) { return nodes_[id]; }
  void check_owns(Value v, const char* op) const;
  /// Gradient buffer for a node, external for bound leaves.
  Array& grad_target(Node& n) { return n.grad_sink ? *n.grad_sink : n.grad; }

  std::vector<Node> nodes_;
};

}  // namespace samkit
