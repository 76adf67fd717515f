// Copyright 2026 The hids Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hids/autograd.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "hids/error.hpp"

namespace hids::ag {
namespace {

std::string shape_str(const Matrix& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

void require_same_shape(std::string_view op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) +
                     " vs " + shape_str(b.value()));
  }
}

void require_same_tape(std::string_view op, const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) {
    throw Error(std::string(op) + ": operands recorded on different tapes");
  }
}

// A double is non-finite exactly when its exponent bits are all set. The
// integer test vectorizes; Matrix::allFinite does not.
bool all_finite(const Matrix& m) {
  constexpr std::uint64_t kExponent = 0x7FF0000000000000ULL;
  const double* p = m.data();
  std::uint64_t bad = 0;
  for (Index i = 0; i < m.size(); ++i) {
    bad |= static_cast<std::uint64_t>((std::bit_cast<std::uint64_t>(p[i]) & kExponent) == kExponent);
  }
  return bad == 0;
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::push(Node node) {
  if (!all_finite(node.value)) {
    throw NumericError(std::string("non-finite value produced by ") +
                       std::string(node.op));
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(Tensor& tensor) {
  Node n;
  n.op = "param";
  n.value = tensor.value;
  n.param = &tensor;
  n.requires_grad = tensor.requires_grad;
  return push(std::move(n));
}

Var Tape::record(std::string_view op, Matrix value, std::initializer_list<Var> inputs,
                 Backward backward) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(std::string_view op, Matrix value, std::span<const Var> inputs,
                 Backward backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (&v.tape() != this) {
      throw Error(std::string(op) + ": input recorded on a different tape");
    }
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

void Tape::backward(Var loss, Retain retain) {
  if (nodes_.empty()) throw Error("backward: tape is empty (no forward recorded)");
  if (&loss.tape() != this) throw Error("backward: loss is not on this tape");
  if (backward_done_) {
    throw Error("backward: already run for this forward; reset the tape first");
  }
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape_str(lv));
  }
  backward_done_ = true;

  if (nodes_[loss.id()].requires_grad) {
    nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  }
  std::vector<Matrix*> grads;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.size() == 0 || !node.backward) continue;
    grads.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      Node& in = nodes_[node.inputs[k]];
      if (!in.requires_grad) continue;
      if (in.grad.size() == 0) in.grad.setZero(in.value.rows(), in.value.cols());
      grads[k] = &in.grad;
    }
    node.backward(node.value, node.grad, grads);
    if (retain == Retain::kNothing) {
      node.grad = Matrix();
      node.value = Matrix();
      node.backward = nullptr;
    }
  }
  for (Node& node : nodes_) {
    if (node.param == nullptr || !node.requires_grad) continue;
    Tensor& t = *node.param;
    if (!t.has_grad()) t.zero_grad();
    if (node.grad.size() != 0) t.grad += node.grad;
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

std::string Tape::dump() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    out << i << ' ' << n.op << ' ' << shape_str(n.value);
    if (n.param != nullptr) out << ' ' << n.param->name;
    if (!n.inputs.empty()) {
      out << " <-";
      for (std::size_t in : n.inputs) out << ' ' << in;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape("matmul", a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.value()) + " x " +
                     shape_str(b.value()));
  }
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  return a.tape().record("matmul", std::move(out), {a, b},
                         [a, b](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           if (gi[0]) gi[0]->noalias() += g * b.value().transpose();
                           if (gi[1]) gi[1]->noalias() += a.value().transpose() * g;
                         });
}

Var add(Var a, Var b) {
  require_same_tape("add", a, b);
  require_same_shape("add", a, b);
  return a.tape().record("add", a.value() + b.value(), {a, b},
                         [](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           if (gi[0]) *gi[0] += g;
                           if (gi[1]) *gi[1] += g;
                         });
}

Var sub(Var a, Var b) {
  require_same_tape("sub", a, b);
  require_same_shape("sub", a, b);
  return a.tape().record("sub", a.value() - b.value(), {a, b},
                         [](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           if (gi[0]) *gi[0] += g;
                           if (gi[1]) *gi[1] -= g;
                         });
}

Var mul(Var a, Var b) {
  require_same_tape("mul", a, b);
  require_same_shape("mul", a, b);
  return a.tape().record(
      "mul", a.value().cwiseProduct(b.value()), {a, b},
      [a, b](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
        if (gi[0]) gi[0]->array() += g.array() * b.value().array();
        if (gi[1]) gi[1]->array() += g.array() * a.value().array();
      });
}

Var sigmoid(Var a) {
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  return a.tape().record("sigmoid", std::move(out), {a},
                         [](const Matrix& y, const Matrix& g, std::span<Matrix* const> gi) {
                           gi[0]->array() += g.array() * y.array() * (1.0 - y.array());
                         });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.tape().record("tanh", std::move(out), {a},
                         [](const Matrix& y, const Matrix& g, std::span<Matrix* const> gi) {
                           gi[0]->array() += g.array() * (1.0 - y.array().square());
                         });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().record("relu", std::move(out), {a},
                         [a](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           gi[0]->array() +=
                               (a.value().array() > 0.0).select(g.array(), 0.0);
                         });
}

Var scale(Var a, double factor) {
  return a.tape().record("scale", a.value() * factor, {a},
                         [factor](const Matrix&, const Matrix& g,
                                  std::span<Matrix* const> gi) { *gi[0] += g * factor; });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) {
    throw NumericError("log: non-positive argument");
  }
  return a.tape().record("log", a.value().array().log().matrix(), {a},
                         [a](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           gi[0]->array() += g.array() / a.value().array();
                         });
}

Var elementwise(Elementwise op, Var a, Var b) {
  switch (op) {
    case Elementwise::kAdd: return add(a, b);
    case Elementwise::kSub: return sub(a, b);
    case Elementwise::kMul: return mul(a, b);
    case Elementwise::kSigmoid: return sigmoid(a);
    case Elementwise::kTanh: return tanh(a);
    case Elementwise::kRelu: return relu(a);
  }
  throw Error("elementwise: unknown op");
}

Var add_row(Var a, Var row) {
  require_same_tape("add_row", a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: " + shape_str(a.value()) + " + row " +
                     shape_str(row.value()));
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape().record("add_row", std::move(out), {a, row},
                         [](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           if (gi[0]) *gi[0] += g;
                           if (gi[1]) *gi[1] += g.colwise().sum();
                         });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record("sum", std::move(out), {a},
                         [](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           gi[0]->array() += g(0, 0);
                         });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return a.tape().record("mean", std::move(out), {a},
                         [n](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           gi[0]->array() += g(0, 0) / n;
                         });
}

Var sum_squares(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.tape().record("sum_squares", std::move(out), {a},
                         [a](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           *gi[0] += (2.0 * g(0, 0)) * a.value();
                         });
}

namespace {

Matrix softmax_values(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

void check_labels(std::string_view op, std::span<const int> labels, Index rows,
                  Index classes) {
  if (static_cast<Index>(labels.size()) != rows) {
    throw ShapeError(std::string(op) + ": " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(rows) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw DataError(std::string(op) + ": label index " + std::to_string(y) +
                      " out of range [0," + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

Var softmax_rows(Var a) {
  return a.tape().record("softmax_rows", softmax_values(a.value()), {a},
                         [](const Matrix& y, const Matrix& g, std::span<Matrix* const> gi) {
                           for (Index r = 0; r < y.rows(); ++r) {
                             const double dot = g.row(r).dot(y.row(r));
                             gi[0]->row(r).array() +=
                                 y.row(r).array() * (g.row(r).array() - dot);
                           }
                         });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  const Matrix& x = logits.value();
  check_labels("cross_entropy", labels, x.rows(), x.cols());
  std::vector<int> ys(labels.begin(), labels.end());
  double total = 0.0;
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    total += lse - x(r, ys[static_cast<std::size_t>(r)]);
  }
  const double n = static_cast<double>(x.rows());
  Matrix out(1, 1);
  out(0, 0) = total / n;
  return logits.tape().record(
      "cross_entropy", std::move(out), {logits},
      [logits, ys = std::move(ys), n](const Matrix&, const Matrix& g,
                                      std::span<Matrix* const> gi) {
        Matrix p = softmax_values(logits.value());
        for (Index r = 0; r < p.rows(); ++r) p(r, ys[static_cast<std::size_t>(r)]) -= 1.0;
        *gi[0] += p * (g(0, 0) / n);
      });
}

Var nll(Var probs, std::span<const int> labels) {
  const Matrix& p = probs.value();
  check_labels("nll", labels, p.rows(), p.cols());
  std::vector<int> ys(labels.begin(), labels.end());
  double total = 0.0;
  for (Index r = 0; r < p.rows(); ++r) {
    const double py = p(r, ys[static_cast<std::size_t>(r)]);
    if (!(py > 0.0)) throw NumericError("nll: zero probability assigned to true class");
    total -= std::log(py);
  }
  const double n = static_cast<double>(p.rows());
  Matrix out(1, 1);
  out(0, 0) = total / n;
  return probs.tape().record(
      "nll", std::move(out), {probs},
      [probs, ys = std::move(ys), n](const Matrix&, const Matrix& g,
                                     std::span<Matrix* const> gi) {
        for (Index r = 0; r < probs.rows(); ++r) {
          const auto c = ys[static_cast<std::size_t>(r)];
          (*gi[0])(r, c) -= g(0, 0) / (n * probs.value()(r, c));
        }
      });
}

Var dropout(Var a, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw NumericError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
  }
  if (mode == Mode::kInfer || rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() >= rate ? keep_scale : 0.0;
  }
  Matrix out = a.value().cwiseProduct(mask);
  return a.tape().record("dropout", std::move(out), {a},
                         [mask = std::move(mask)](const Matrix&, const Matrix& g,
                                                  std::span<Matrix* const> gi) {
                           gi[0]->array() += g.array() * mask.array();
                         });
}

Var batchnorm(Var x, Var gamma, Var beta, Mode mode, RunningStats& stats,
              BatchNormOptions options) {
  require_same_tape("batchnorm", x, gamma);
  require_same_tape("batchnorm", x, beta);
  const Index n = x.rows();
  const Index d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d) {
    throw ShapeError("batchnorm: affine parameters " + shape_str(gamma.value()) + "/" +
                     shape_str(beta.value()) + " for input " + shape_str(x.value()));
  }
  if (stats.mean.cols() != d) {
    throw ShapeError("batchnorm: running statistics width " +
                     std::to_string(stats.mean.cols()) + " for input " +
                     shape_str(x.value()));
  }

  Matrix mu(1, d);
  Matrix inv_std(1, d);
  if (mode == Mode::kTrain) {
    if (n < 2) {
      throw ShapeError("batchnorm: train mode needs a batch of at least 2 rows, got " +
                       std::to_string(n));
    }
    mu = x.value().colwise().mean();
    Matrix centered = x.value().rowwise() - mu.row(0);
    Matrix var = centered.array().square().colwise().sum().matrix() / static_cast<double>(n);
    inv_std = (var.array() + options.eps).rsqrt().matrix();
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    stats.mean = options.momentum * stats.mean + (1.0 - options.momentum) * mu;
    stats.var = options.momentum * stats.var + (1.0 - options.momentum) * unbias * var;
  } else {
    mu = stats.mean;
    inv_std = (stats.var.array() + options.eps).rsqrt().matrix();
  }

  Matrix xhat = (x.value().rowwise() - mu.row(0)).array().rowwise() * inv_std.row(0).array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  const bool batch_stats = mode == Mode::kTrain;
  return x.tape().record(
      "batchnorm", std::move(out), {x, gamma, beta},
      [gamma, xhat = std::move(xhat), inv_std, batch_stats](
          const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
        if (gi[1]) *gi[1] += g.cwiseProduct(xhat).colwise().sum();
        if (gi[2]) *gi[2] += g.colwise().sum();
        if (!gi[0]) return;
        Matrix dxhat = g.array().rowwise() * gamma.value().row(0).array();
        if (!batch_stats) {
          *gi[0] += (dxhat.array().rowwise() * inv_std.row(0).array()).matrix();
          return;
        }
        const double m = static_cast<double>(g.rows());
        Matrix sum_d = dxhat.colwise().sum();
        Matrix sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
        Matrix dx = (m * dxhat.array() - (xhat.array().rowwise() * sum_dx.row(0).array()))
                        .rowwise() -
                    sum_d.row(0).array();
        *gi[0] += (dx.array().rowwise() * (inv_std.row(0).array() / m)).matrix();
      });
}

Var gather_rows(Var a, std::vector<Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  const Matrix& av = a.value();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " outside " +
                       shape_str(av));
    }
    out.row(static_cast<Index>(i)) = av.row(rows[i]);
  }
  return a.tape().record("gather_rows", std::move(out), {a},
                         [rows = std::move(rows)](const Matrix&, const Matrix& g,
                                                  std::span<Matrix* const> gi) {
                           for (std::size_t i = 0; i < rows.size(); ++i) {
                             gi[0]->row(rows[i]) += g.row(static_cast<Index>(i));
                           }
                         });
}

Var slice_rows(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", +" +
                     std::to_string(count) + ") outside " + shape_str(a.value()));
  }
  return a.tape().record("slice_rows", a.value().middleRows(start, count), {a},
                         [start, count](const Matrix&, const Matrix& g,
                                        std::span<Matrix* const> gi) {
                           gi[0]->middleRows(start, count) += g;
                         });
}

Var slice_cols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", +" +
                     std::to_string(count) + ") outside " + shape_str(a.value()));
  }
  return a.tape().record("slice_cols", a.value().middleCols(start, count), {a},
                         [start, count](const Matrix&, const Matrix& g,
                                        std::span<Matrix* const> gi) {
                           gi[0]->middleCols(start, count) += g;
                         });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Index rows = 0;
  const Index cols = parts[0].cols();
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: column counts differ " + shape_str(parts[0].value()) +
                       " vs " + shape_str(p.value()));
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  offsets.reserve(parts.size());
  Index at = 0;
  for (const Var& p : parts) {
    offsets.push_back(at);
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Index> sizes;
  for (const Var& p : parts) sizes.push_back(p.rows());
  return parts[0].tape().record(
      "concat_rows", std::move(out), parts,
      [offsets = std::move(offsets), sizes = std::move(sizes)](
          const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
        for (std::size_t k = 0; k < gi.size(); ++k) {
          if (gi[k]) *gi[k] += g.middleRows(offsets[k], sizes[k]);
        }
      });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Index cols = 0;
  const Index rows = parts[0].rows();
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row counts differ " + shape_str(parts[0].value()) +
                       " vs " + shape_str(p.value()));
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  std::vector<Index> sizes;
  Index at = 0;
  for (const Var& p : parts) {
    offsets.push_back(at);
    sizes.push_back(p.cols());
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts[0].tape().record(
      "concat_cols", std::move(out), parts,
      [offsets = std::move(offsets), sizes = std::move(sizes)](
          const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
        for (std::size_t k = 0; k < gi.size(); ++k) {
          if (gi[k]) *gi[k] += g.middleCols(offsets[k], sizes[k]);
        }
      });
}

Var block_diag_matmul(std::shared_ptr<const std::vector<Matrix>> blocks, Var a) {
  Index total = 0;
  for (const Matrix& b : *blocks) {
    if (b.rows() != b.cols()) {
      throw ShapeError("block_diag_matmul: block " + shape_str(b) + " is not square");
    }
    total += b.rows();
  }
  if (total != a.rows()) {
    throw ShapeError("block_diag_matmul: blocks cover " + std::to_string(total) +
                     " rows, input is " + shape_str(a.value()));
  }
  Matrix out(a.rows(), a.cols());
  Index at = 0;
  for (const Matrix& b : *blocks) {
    out.middleRows(at, b.rows()).noalias() = b * a.value().middleRows(at, b.rows());
    at += b.rows();
  }
  return a.tape().record("block_diag_matmul", std::move(out), {a},
                         [blocks = std::move(blocks)](const Matrix&, const Matrix& g,
                                                      std::span<Matrix* const> gi) {
                           Index off = 0;
                           for (const Matrix& b : *blocks) {
                             gi[0]->middleRows(off, b.rows()).noalias() +=
                                 b.transpose() * g.middleRows(off, b.rows());
                             off += b.rows();
                           }
                         });
}

Var group_matmul(Var a, Var b, Index groups, bool transpose_b) {
  require_same_tape("group_matmul", a, b);
  if (groups <= 0 || a.rows() % groups != 0 || b.rows() % groups != 0) {
    throw ShapeError("group_matmul: " + std::to_string(groups) + " groups do not divide " +
                     shape_str(a.value()) + " and " + shape_str(b.value()));
  }
  const Index m = a.rows() / groups;
  const Index bn = b.rows() / groups;
  if (transpose_b ? a.cols() != b.cols() : a.cols() != bn) {
    throw ShapeError("group_matmul: inner dimensions differ " + shape_str(a.value()) +
                     " x " + shape_str(b.value()));
  }
  const Index n = transpose_b ? bn : b.cols();
  Matrix out(groups * m, n);
  for (Index g = 0; g < groups; ++g) {
    if (transpose_b) {
      out.middleRows(g * m, m).noalias() =
          a.value().middleRows(g * m, m) * b.value().middleRows(g * bn, bn).transpose();
    } else {
      out.middleRows(g * m, m).noalias() =
          a.value().middleRows(g * m, m) * b.value().middleRows(g * bn, bn);
    }
  }
  return a.tape().record(
      "group_matmul", std::move(out), {a, b},
      [a, b, groups, m, bn, transpose_b](const Matrix&, const Matrix& g,
                                         std::span<Matrix* const> gi) {
        for (Index k = 0; k < groups; ++k) {
          const auto gk = g.middleRows(k * m, m);
          const auto ak = a.value().middleRows(k * m, m);
          const auto bk = b.value().middleRows(k * bn, bn);
          if (transpose_b) {
            if (gi[0]) gi[0]->middleRows(k * m, m).noalias() += gk * bk;
            if (gi[1]) gi[1]->middleRows(k * bn, bn).noalias() += gk.transpose() * ak;
          } else {
            if (gi[0]) gi[0]->middleRows(k * m, m).noalias() += gk * bk.transpose();
            if (gi[1]) gi[1]->middleRows(k * bn, bn).noalias() += ak.transpose() * gk;
          }
        }
      });
}

Var group_mean_rows(Var a, Index groups) {
  if (groups <= 0 || a.rows() % groups != 0 || a.rows() == 0) {
    throw ShapeError("group_mean_rows: " + std::to_string(groups) +
                     " groups do not divide " + shape_str(a.value()));
  }
  const Index m = a.rows() / groups;
  Matrix out(groups, a.cols());
  for (Index g = 0; g < groups; ++g) {
    out.row(g) = a.value().middleRows(g * m, m).colwise().sum() / static_cast<double>(m);
  }
  return a.tape().record("group_mean_rows", std::move(out), {a},
                         [m](const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                           const double inv = 1.0 / static_cast<double>(m);
                           for (Index k = 0; k < g.rows(); ++k) {
                             gi[0]->middleRows(k * m, m).rowwise() += g.row(k) * inv;
                           }
                         });
}

}  // namespace hids::ag
