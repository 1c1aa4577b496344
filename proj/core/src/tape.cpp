#include "samkit/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace samkit {

namespace {

[[noreturn]] void shape_error(const char* op, const Array& a, const Array& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_str(a.shape) + " and " + shape_str(b.shape));
}

}  // namespace

const Array& Value::data() const { return tape_->node(id_).data; }

const Array& Value::grad() const {
  const auto& n = tape_->node(id_);
  if (!n.requires_grad) {
    throw std::logic_error("Value::grad: node does not require grad");
  }
  if (!n.grad_ready) {
    throw std::logic_error("Value::grad: backward has not populated this node");
  }
  return n.grad_sink ? *n.grad_sink : n.grad;
}

bool Value::requires_grad() const { return tape_->node(id_).requires_grad; }

const Shape& Value::shape() const { return tape_->node(id_).data.shape; }

double Value::item() const {
  const Array& d = data();
  if (d.size() != 1) {
    throw std::logic_error("Value::item: node has shape " + shape_str(d.shape));
  }
  return d.data[0];
}

Value Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value(this, nodes_.size() - 1);
}

void Tape::check_owns(Value v, const char* op) const {
  if (v.tape_ != this) {
    throw std::logic_error(std::string(op) + ": value belongs to another tape");
  }
}

Value Tape::leaf(Array data, bool requires_grad) {
  Node n;
  n.data = std::move(data);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Value Tape::bound_leaf(const Array& data, Array* grad_sink, bool* grad_flag) {
  if (grad_sink == nullptr || grad_flag == nullptr) {
    throw std::invalid_argument("bound_leaf: null gradient sink");
  }
  if (!grad_sink->same_shape(data)) {
    shape_error("bound_leaf", data, *grad_sink);
  }
  Node n;
  n.data = data;
  n.requires_grad = true;
  n.grad_sink = grad_sink;
  n.grad_flag = grad_flag;
  return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
  check_owns(a, "add");
  check_owns(b, "add");
  const Array& da = a.data();
  const Array& db = b.data();
  Node n;
  if (da.same_shape(db)) {
    n.data = Array(da.shape);
    for (std::size_t i = 0; i < da.size(); ++i) n.data.data[i] = da.data[i] + db.data[i];
  } else if (da.rank() == 2 && db.rank() == 1 && da.cols() == db.size()) {
    // row broadcast (bias add)
    n.data = Array(da.shape);
    for (std::size_t i = 0; i < da.rows(); ++i)
      for (std::size_t j = 0; j < da.cols(); ++j)
        n.data.at(i, j) = da.at(i, j) + db.data[j];
  } else {
    shape_error("add", da, db);
  }
  n.op = Op::kAdd;
  n.in = {a.id_, b.id_};
  n.arity = 2;
  n.requires_grad = a.requires_grad() || b.requires_grad();
  return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
  check_owns(a, "sub");
  check_owns(b, "sub");
  const Array& da = a.data();
  const Array& db = b.data();
  if (!da.same_shape(db)) shape_error("sub", da, db);
  Node n;
  n.data = Array(da.shape);
  for (std::size_t i = 0; i < da.size(); ++i) n.data.data[i] = da.data[i] - db.data[i];
  n.op = Op::kSub;
  n.in = {a.id_, b.id_};
  n.arity = 2;
  n.requires_grad = a.requires_grad() || b.requires_grad();
  return push(std::move(n));
}

Value Tape::scale(Value a, double c) { return scale(a, Array::scalar(c)); }

Value Tape::scale(Value a, Array coeff) {
  check_owns(a, "scale");
  const Array& da = a.data();
  const bool uniform = coeff.size() == 1;
  if (!uniform && !coeff.same_shape(da)) shape_error("scale", da, coeff);
  Node n;
  n.data = Array(da.shape);
  for (std::size_t i = 0; i < da.size(); ++i) {
    n.data.data[i] = da.data[i] * (uniform ? coeff.data[0] : coeff.data[i]);
  }
  n.op = Op::kScale;
  n.in = {a.id_, 0};
  n.arity = 1;
  n.requires_grad = a.requires_grad();
  n.coeff = std::move(coeff);
  return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
  check_owns(a, "matmul");
  check_owns(b, "matmul");
  const Array& da = a.data();
  const Array& db = b.data();
  Node n;
  if (da.rank() == 2 && db.rank() == 2 && da.cols() == db.rows()) {
    const std::size_t rows = da.rows(), inner = da.cols(), cols = db.cols();
    n.data = Array({rows, cols});
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = 0; k < inner; ++k) {
        const double aik = da.at(i, k);
        for (std::size_t j = 0; j < cols; ++j) n.data.at(i, j) += aik * db.at(k, j);
      }
  } else if (da.rank() == 1 && db.rank() == 1 && da.size() == db.size()) {
    n.data = Array::scalar(dot(da.data, db.data));
  } else {
    shape_error("matmul", da, db);
  }
  n.op = Op::kMatmul;
  n.in = {a.id_, b.id_};
  n.arity = 2;
  n.requires_grad = a.requires_grad() || b.requires_grad();
  return push(std::move(n));
}

Value Tape::relu(Value a) {
  check_owns(a, "relu");
  const Array& da = a.data();
  Node n;
  n.data = Array(da.shape);
  for (std::size_t i = 0; i < da.size(); ++i) n.data.data[i] = da.data[i] > 0.0 ? da.data[i] : 0.0;
  n.op = Op::kRelu;
  n.in = {a.id_, 0};
  n.arity = 1;
  n.requires_grad = a.requires_grad();
  return push(std::move(n));
}

Value Tape::log_softmax(Value a) {
  check_owns(a, "log_softmax");
  const Array& da = a.data();
  if (da.rank() != 1 && da.rank() != 2) {
    throw std::invalid_argument("log_softmax: expected rank 1 or 2, got shape " +
                                shape_str(da.shape));
  }
  const std::size_t rows = da.rank() == 2 ? da.rows() : 1;
  const std::size_t cols = da.rank() == 2 ? da.cols() : da.size();
  if (cols == 0) {
    throw std::invalid_argument("log_softmax: empty class axis, shape " + shape_str(da.shape));
  }
  Node n;
  n.data = Array(da.shape);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = da.data.data() + i * cols;
    double* out = n.data.data.data() + i * cols;
    double m = row[0];
    for (std::size_t j = 1; j < cols; ++j) m = std::max(m, row[j]);
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += std::exp(row[j] - m);
    const double lse = m + std::log(acc);
    for (std::size_t j = 0; j < cols; ++j) out[j] = row[j] - lse;
  }
  n.op = Op::kLogSoftmax;
  n.in = {a.id_, 0};
  n.arity = 1;
  n.requires_grad = a.requires_grad();
  return push(std::move(n));
}

Value Tape::gather_class(Value a, std::vector<std::size_t> classes) {
  check_owns(a, "gather_class");
  const Array& da = a.data();
  if (da.rank() != 2) {
    throw std::invalid_argument("gather_class: expected rank 2, got shape " +
                                shape_str(da.shape));
  }
  if (classes.size() != da.rows()) {
    throw std::invalid_argument("gather_class: " + std::to_string(classes.size()) +
                                " indices for " + std::to_string(da.rows()) + " rows");
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= da.cols()) {
      throw std::invalid_argument("gather_class: index " + std::to_string(classes[i]) +
                                  " out of range at row " + std::to_string(i) +
                                  " for shape " + shape_str(da.shape));
    }
  }
  Node n;
  n.data = Array({da.rows()});
  for (std::size_t i = 0; i < da.rows(); ++i) n.data.data[i] = da.at(i, classes[i]);
  n.op = Op::kGatherClass;
  n.in = {a.id_, 0};
  n.arity = 1;
  n.requires_grad = a.requires_grad();
  n.classes = std::move(classes);
  return push(std::move(n));
}

Value Tape::mean(Value a) {
  check_owns(a, "mean");
  const Array& da = a.data();
  if (da.size() == 0) {
    throw std::invalid_argument("mean: empty input, shape " + shape_str(da.shape));
  }
  double acc = 0.0;
  for (double v : da.data) acc += v;
  Node n;
  n.data = Array::scalar(acc / static_cast<double>(da.size()));
  n.op = Op::kMean;
  n.in = {a.id_, 0};
  n.arity = 1;
  n.requires_grad = a.requires_grad();
  return push(std::move(n));
}

Value Tape::sum(Value a) {
  check_owns(a, "sum");
  const Array& da = a.data();
  double acc = 0.0;
  for (double v : da.data) acc += v;
  Node n;
  n.data = Array::scalar(acc);
  n.op = Op::kSum;
  n.in = {a.id_, 0};
  n.arity = 1;
  n.requires_grad = a.requires_grad();
  return push(std::move(n));
}

Value Tape::stop_grad(Value a) {
  check_owns(a, "stop_grad");
  Node n;
  n.data = a.data();
  n.op = Op::kStopGrad;
  n.arity = 0;  // no recorded dependence on the input
  n.requires_grad = false;
  return push(std::move(n));
}

void Tape::backward(Value root) {
  check_owns(root, "backward");
  const std::size_t root_id = root.id_;
  if (node(root_id).data.size() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_str(node(root_id).data.shape));
  }

  // Allocate scratch gradients up to the root. Leaf gradients persist and
  // accumulate; interior gradients are zeroed per call.
  for (std::size_t i = 0; i <= root_id; ++i) {
    Node& n = node(i);
    if (!n.requires_grad) continue;
    if (n.op == Op::kLeaf) {
      Array& g = grad_target(n);
      if (!g.same_shape(n.data)) g = Array(n.data.shape);
    } else {
      n.grad = Array(n.data.shape);
    }
  }

  if (node(root_id).requires_grad) {
    grad_target(node(root_id)).data[0] += 1.0;

    for (std::size_t idx = root_id + 1; idx-- > 0;) {
      Node& n = node(idx);
      if (!n.requires_grad || n.arity == 0) continue;
      const Array& g = n.grad;
      Node& a = node(n.in[0]);
      Node& b = node(n.in[1]);  // aliases a when arity == 1

      switch (n.op) {
        case Op::kAdd: {
          if (a.requires_grad) {
            Array& ga = grad_target(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
          }
          if (b.requires_grad) {
            Array& gb = grad_target(b);
            if (b.data.same_shape(n.data)) {
              for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
            } else {
              // row-broadcast input: reduce over rows
              const std::size_t cols = n.data.cols();
              for (std::size_t i = 0; i < n.data.rows(); ++i)
                for (std::size_t j = 0; j < cols; ++j) gb.data[j] += g.data[i * cols + j];
            }
          }
          break;
        }
        case Op::kSub: {
          if (a.requires_grad) {
            Array& ga = grad_target(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
          }
          if (b.requires_grad) {
            Array& gb = grad_target(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
          }
          break;
        }
        case Op::kScale: {
          if (a.requires_grad) {
            Array& ga = grad_target(a);
            const bool uniform = n.coeff.size() == 1;
            for (std::size_t i = 0; i < g.size(); ++i) {
              ga.data[i] += g.data[i] * (uniform ? n.coeff.data[0] : n.coeff.data[i]);
            }
          }
          break;
        }
        case Op::kMatmul: {
          if (n.data.rank() == 1) {  // dot product
            const double go = g.data[0];
            if (a.requires_grad) {
              Array& ga = grad_target(a);
              for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go * b.data.data[i];
            }
            if (b.requires_grad) {
              Array& gb = grad_target(b);
              for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += go * a.data.data[i];
            }
          } else {
            const std::size_t rows = a.data.rows(), inner = a.data.cols(), cols = b.data.cols();
            if (a.requires_grad) {
              Array& ga = grad_target(a);  // g (rows, cols) x b^T (cols, inner)
              for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) {
                  const double gij = g.data[i * cols + j];
                  for (std::size_t k = 0; k < inner; ++k)
                    ga.data[i * inner + k] += gij * b.data.at(k, j);
                }
            }
            if (b.requires_grad) {
              Array& gb = grad_target(b);  // a^T (inner, rows) x g (rows, cols)
              for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t k = 0; k < inner; ++k) {
                  const double aik = a.data.at(i, k);
                  for (std::size_t j = 0; j < cols; ++j)
                    gb.data[k * cols + j] += aik * g.data[i * cols + j];
                }
            }
          }
          break;
        }
        case Op::kRelu: {
          if (a.requires_grad) {
            Array& ga = grad_target(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
              if (a.data.data[i] > 0.0) ga.data[i] += g.data[i];
            }
          }
          break;
        }
        case Op::kLogSoftmax: {
          if (a.requires_grad) {
            Array& ga = grad_target(a);
            const std::size_t rows = n.data.rank() == 2 ? n.data.rows() : 1;
            const std::size_t cols = n.data.rank() == 2 ? n.data.cols() : n.data.size();
            for (std::size_t i = 0; i < rows; ++i) {
              const double* gr = g.data.data() + i * cols;
              const double* lp = n.data.data.data() + i * cols;
              double gsum = 0.0;
              for (std::size_t j = 0; j < cols; ++j) gsum += gr[j];
              double* out = ga.data.data() + i * cols;
              for (std::size_t j = 0; j < cols; ++j) out[j] += gr[j] - std::exp(lp[j]) * gsum;
            }
          }
          break;
        }
        case Op::kGatherClass: {
          if (a.requires_grad) {
            Array& ga = grad_target(a);
            for (std::size_t i = 0; i < n.classes.size(); ++i)
              ga.at(i, n.classes[i]) += g.data[i];
          }
          break;
        }
        case Op::kMean: {
          if (a.requires_grad) {
            Array& ga = grad_target(a);
            const double go = g.data[0] / static_cast<double>(a.data.size());
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go;
          }
          break;
        }
        case Op::kSum: {
          if (a.requires_grad) {
            Array& ga = grad_target(a);
            const double go = g.data[0];
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go;
          }
          break;
        }
        case Op::kLeaf:
        case Op::kStopGrad:
          break;
      }
    }
  }

  for (std::size_t i = 0; i <= root_id; ++i) {
    Node& n = node(i);
    if (!n.requires_grad) continue;
    n.grad_ready = true;
    if (n.grad_flag != nullptr) *n.grad_flag = true;
  }
}

}  // namespace samkit
