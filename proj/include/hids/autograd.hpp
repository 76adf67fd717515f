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

#pragma once

// Tape-based reverse-mode automatic differentiation over dense 2-D double
// matrices. Every numeric primitive used by the model lives here; scalars are
// 1x1 matrices.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hids/random.hpp"

namespace hids::ag {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

enum class Mode { kTrain, kInfer };

/// A named value that persists across tapes (a trainable parameter or a
/// standalone input). `grad` is empty until a backward pass reaches it.
struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;
  bool requires_grad = true;
  // Included in the L2 penalty (weight matrices, not biases or norm affines).
  bool decay = false;

  Tensor() = default;
  Tensor(std::string n, Matrix v, bool decay_flag = false)
      : name(std::move(n)), value(std::move(v)), decay(decay_flag) {}

  std::array<Index, 2> shape() const { return {value.rows(), value.cols()}; }
  bool has_grad() const { return grad.size() == value.size() && grad.size() > 0; }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class Retain { kValues, kNothing };

class Tape {
 public:
  /// Accumulates the op's input gradients given its output value and the
  /// gradient flowing into it. Entries of `grad_in` are null for inputs that
  /// do not require a gradient.
  using Backward = std::function<void(const Matrix& value, const Matrix& grad_out,
                                      std::span<Matrix* const> grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Tensor& tensor);

  /// Appends an executed op. Throws NumericError when `value` is not finite.
  Var record(std::string_view op, Matrix value, std::initializer_list<Var> inputs,
             Backward backward);
  Var record(std::string_view op, Matrix value, std::span<const Var> inputs,
             Backward backward);

  /// Reverse pass from a 1x1 loss. Every parameter reachable from the tape
  /// receives d(loss)/d(param) added to Tensor::grad; parameters on the tape
  /// but not reached receive zeros. `Retain::kNothing` frees intermediate
  /// values as soon as they are consumed.
  void backward(Var loss, Retain retain = Retain::kValues);

  void reset();

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  /// One line per op: id, op name, shape, input ids.
  std::string dump() const;

 private:
  struct Node {
    std::string_view op;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    Backward backward;
    Tensor* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// Linear algebra.
Var matmul(Var a, Var b);

// Elementwise.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var scale(Var a, double factor);
Var log(Var a);

enum class Elementwise { kAdd, kSub, kMul, kSigmoid, kTanh, kRelu };
/// Dispatches to the unary or binary op named by `op`; `b` is ignored for
/// unary ops.
Var elementwise(Elementwise op, Var a, Var b = {});

/// Adds a 1xn row vector to every row of an mxn matrix.
Var add_row(Var a, Var row);

// Reductions.
Var sum(Var a);
Var mean(Var a);
Var sum_squares(Var a);

Var softmax_rows(Var a);

/// Mean over rows of -log softmax(logits)[label].
Var cross_entropy(Var logits, std::span<const int> labels);
/// Mean over rows of -log probs[label]; probs rows must be distributions.
Var nll(Var probs, std::span<const int> labels);

/// Inverted dropout; identity in infer mode or at rate 0.
Var dropout(Var a, double rate, Mode mode, Rng& rng);

struct RunningStats {
  Matrix mean;
  Matrix var;
  explicit RunningStats(Index width = 0)
      : mean(Matrix::Zero(1, width)), var(Matrix::Ones(1, width)) {}
};

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.9;
};

/// Per-column normalization of a batch x d matrix. Train mode uses batch
/// statistics and updates `stats`; infer mode uses `stats`.
Var batchnorm(Var x, Var gamma, Var beta, Mode mode, RunningStats& stats,
              BatchNormOptions options = {});

// Structural ops.
Var gather_rows(Var a, std::vector<Index> rows);
Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

/// Rows of `a` are stacked diagonal blocks: block k covers rows
/// [o_k, o_k + n_k) where n_k = blocks[k].rows(). Output block k is
/// blocks[k] * a[o_k : o_k + n_k, :]. The blocks are constants.
Var block_diag_matmul(std::shared_ptr<const std::vector<Matrix>> blocks, Var a);

/// `a` and `b` hold `groups` equal row blocks. Output block g is
/// a_g * b_g (or a_g * b_g^T when `transpose_b`).
Var group_matmul(Var a, Var b, Index groups, bool transpose_b);

/// Mean of each of `groups` equal row blocks; output is groups x cols.
Var group_mean_rows(Var a, Index groups);

}  // namespace hids::ag
