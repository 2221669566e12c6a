// Copyright 2026 The hatemtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hatemtl/numerics/tensor.hpp"

namespace hatemtl::num {

/// A value on (or feeding into) a computation graph. Leaves created with
/// parameter() accumulate gradients across graphs until zeroed.
struct Node {
  Tensor value;
  std::vector<double> grad;
  bool requires_grad = false;
  // Pushes this node's grad into its operands' grads.
  std::function<void(Node& self)> backward;
};

using Var = std::shared_ptr<Node>;

Var parameter(Tensor value);
Var constant(Tensor value);

void zero_grad(std::span<const Var> params);

/// Dynamic reverse-mode tape. One graph per forward pass; backward() consumes it.
///
/// Operand shapes are checked eagerly and a ContractViolation carrying both
/// shapes is thrown on mismatch.
class Graph {
 public:
  Graph() = default;
  /// A non-recording graph computes values only (inference).
  explicit Graph(bool recording) : recording_(recording) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Matrix product [m,k]x[k,n] -> [m,n].
  Var matmul(const Var& a, const Var& b);
  Var add(const Var& a, const Var& b);
  Var mul(const Var& a, const Var& b);
  // [m,n] + bias[n], bias broadcast over rows.
  Var add_row(const Var& a, const Var& bias);
  Var scale(const Var& a, double factor);
  Var tanh(const Var& a);
  Var relu(const Var& a);
  // Per-row normalization over the last axis with affine gain/offset.
  Var layer_norm(const Var& x, const Var& gain, const Var& offset, double eps = 1e-5);
  // Row gather: out[i] = table[ids[i]]. Used for embeddings and first-token selection.
  Var gather_rows(const Var& table, std::span<const int> ids);
  Var transpose(const Var& a);
  Var softmax_rows(const Var& a);
  // softmax(q k^T / sqrt(d)) v, composed from the primitives above.
  Var attention(const Var& q, const Var& k, const Var& v);
  Var concat_cols(std::span<const Var> parts);
  // Mean over axis 0 ([m,n] -> [1,n]) or axis 1 ([m,n] -> [m,1]).
  Var mean(const Var& a, int axis);
  Var sum(std::span<const Var> scalars);
  // -ln(max(p[gold], clip)) for a single probability row.
  Var cross_entropy(const Var& probs, std::size_t gold, double clip = 1e-12);

  /// Records a custom operation. `backward` receives the result node and is
  /// expected to accumulate into the inputs' grads.
  Var record(Tensor value, std::span<const Var> inputs, std::function<void(Node&)> backward);

  /// Accumulates d(loss)/d(leaf) into every gradient-carrying leaf, then clears the tape.
  void backward(const Var& loss);

  std::size_t size() const { return tape_.size(); }
  void clear() { tape_.clear(); }

 private:
  // record() without building a std::function for nodes that stay off the tape.
  template <class F>
  Var emit(Tensor value, std::span<const Var> inputs, F&& backward);

  std::vector<Var> tape_;
  bool recording_ = true;
};

std::vector<double> softmax(std::span<const double> logits);
double cross_entropy(std::span<const double> probs, std::size_t gold, double clip = 1e-12);

}  // namespace hatemtl::num
