// Copyright 2026 The Tempo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense float64 tensors with a dynamic reverse-mode tape.
//
// Every op returns a new Tensor. When any input requires a gradient (and
// gradient recording is enabled on the calling thread) the result keeps
// references to its inputs plus a closure that maps the result's gradient
// onto the inputs' gradients. Backward() topologically sorts the reachable
// nodes and runs those closures once each in reverse order.
//
// Tensors have shared (handle) semantics: copying a Tensor aliases the same
// node, which is how parameters are shared between a layer and its
// optimizer.

#ifndef TEMPO_TENSOR_H_
#define TEMPO_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tempo {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

namespace internal {

struct Node {
  Shape shape;
  std::vector<double> value;
  // Empty when no gradient is present.
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this->grad and accumulates into inputs' grads. Null for leaves.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
  // Allocates a zeroed gradient buffer if absent.
  std::vector<double>& EnsureGrad();
};

}  // namespace internal

class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value, bool requires_grad = false);
  static Tensor FromData(Shape shape, std::vector<double> data,
                         bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Direct write access; intended for leaves (parameters, inputs).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const double> grad() const;
  // Allocates a zeroed gradient if none is present.
  std::span<double> mutable_grad();
  // Drops the gradient entirely, so has_grad() becomes false.
  void ZeroGrad();

  // Copy of the values as a fresh leaf with no history.
  Tensor Detach() const;
  // Deep copy preserving requires_grad (used for parameter snapshots).
  Tensor Clone() const;

  // Identity comparison of the underlying node.
  bool SameNode(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<internal::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<internal::Node> node)
      : node_(std::move(node)) {}

 private:
  std::shared_ptr<internal::Node> node_;
};

// Leaves created with (or switched to) requires_grad on the calling thread.
// A difference across a call shows whether it created trainable state.
std::uint64_t TrainableLeavesCreated();

// Runs reverse-mode accumulation from a scalar loss. Leaf gradients
// accumulate across calls; callers zero them between optimizer steps.
void Backward(const Tensor& loss);

// Returns the nodes reachable from `root` that require grad, in topological
// order (inputs before the nodes that consume them).
std::vector<internal::Node*> TopologicalOrder(const Tensor& root);

bool GradEnabled();

// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---------------------------------------------------------------------------
// Primitives. Shape rules:
//  * Elementwise Add/Sub/Mul accept a right operand whose shape equals a
//    trailing suffix of the left shape (leading batch broadcast only).
//  * MatMul takes rank >= 2 operands; leading batch dims must be equal, or
//    one operand must be a plain matrix that is broadcast over the batch.

Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double factor);

Tensor Reshape(const Tensor& a, Shape shape);
// Swaps the last two axes.
Tensor Transpose(const Tensor& a);
Tensor Permute(const Tensor& a, const std::vector<std::size_t>& order);
// Adds a new leading axis of size `count`, repeating the input.
Tensor Expand(const Tensor& a, std::size_t count);

Tensor Concat(std::span<const Tensor> parts, std::size_t axis);
Tensor Slice(const Tensor& a, std::size_t axis, std::size_t begin,
             std::size_t end);

Tensor Softmax(const Tensor& x, std::size_t axis);
// Normalizes over the last axis, then applies gamma * x + beta.
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);
Tensor Relu(const Tensor& x);
Tensor Sigmoid(const Tensor& x);

Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);
Tensor MseLoss(const Tensor& prediction, const Tensor& target);
// Mean binary cross-entropy; `logits` are pre-sigmoid scores.
Tensor BinaryCrossEntropyLoss(const Tensor& logits, const Tensor& target);

// Attention-score masking for scores shaped [batch, heads, queries, keys].
// Masked entries become -inf, so the following softmax assigns them zero
// weight. `key_valid`, when non-empty, is [batch x keys] with 0 marking
// padded keys. With `causal_block` b > 1, positions are grouped into blocks
// of b that see every key in their own and earlier blocks.
struct AttentionMask {
  bool causal = false;
  std::size_t causal_block = 1;
  std::vector<unsigned char> key_valid;
  std::size_t key_count = 0;

  bool empty() const { return !causal && key_valid.empty(); }
};
Tensor MaskScores(const Tensor& scores, const AttentionMask& mask);

}  // namespace tempo

#endif  // TEMPO_TENSOR_H_
