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

#include "tempo/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

#include <cblas.h>

#include "tempo/errors.h"

namespace tempo {

using internal::Node;

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::vector<double>& Node::EnsureGrad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

namespace {

thread_local bool grad_enabled = true;
thread_local std::uint64_t trainable_leaves = 0;

std::shared_ptr<Node> NewLeaf(Shape shape, std::vector<double> value,
                              bool requires_grad) {
  if (NumElements(shape) != value.size()) {
    throw ShapeError("tensor data has " + std::to_string(value.size()) +
                     " values but shape " + ShapeToString(shape) +
                     " needs " + std::to_string(NumElements(shape)));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  if (requires_grad) ++trainable_leaves;
  return node;
}

// Builds an op result. History is recorded only when some input needs a
// gradient and recording is enabled.
Tensor MakeResult(Shape shape, std::vector<double> value,
                  std::initializer_list<const Tensor*> inputs,
                  std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool any = false;
  if (grad_enabled) {
    for (const Tensor* t : inputs) any = any || t->requires_grad();
  }
  if (any) {
    node->requires_grad = true;
    for (const Tensor* t : inputs) node->inputs.push_back(t->node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor MakeResult(Shape shape, std::vector<double> value,
                  std::span<const Tensor> inputs,
                  std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool any = false;
  if (grad_enabled) {
    for (const Tensor& t : inputs) any = any || t.requires_grad();
  }
  if (any) {
    node->requires_grad = true;
    for (const Tensor& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void RequireDefined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

// Checks that `b` is a trailing suffix of `a` and returns the repeat count.
std::size_t SuffixRepeat(const Tensor& a, const Tensor& b, const char* op) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sb.size() <= sa.size() &&
            std::equal(sb.rbegin(), sb.rend(), sa.rbegin());
  if (!ok) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     ShapeToString(sa) + " vs " + ShapeToString(sb));
  }
  return a.numel() / std::max<std::size_t>(b.numel(), 1);
}

void CheckAxis(const Tensor& t, std::size_t axis, const char* op) {
  if (axis >= t.rank()) {
    throw ShapeError(std::string(op) + ": invalid axis " +
                     std::to_string(axis) + " for shape " +
                     ShapeToString(t.shape()));
  }
}

// Splits a shape around `axis` into (outer, axis length, inner).
struct AxisSplit {
  std::size_t outer, length, inner;
};

AxisSplit SplitAt(const Shape& shape, std::size_t axis) {
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor handle.

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  std::size_t n = NumElements(shape);
  return Tensor(NewLeaf(std::move(shape), std::vector<double>(n, 0.0),
                        requires_grad));
}

Tensor Tensor::Full(Shape shape, double value, bool requires_grad) {
  std::size_t n = NumElements(shape);
  return Tensor(NewLeaf(std::move(shape), std::vector<double>(n, value),
                        requires_grad));
}

Tensor Tensor::FromData(Shape shape, std::vector<double> data,
                        bool requires_grad) {
  return Tensor(NewLeaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return Tensor(NewLeaf({}, {value}, requires_grad));
}

const Shape& Tensor::shape() const {
  RequireDefined(*this, "shape");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  CheckAxis(*this, axis, "dim");
  return node_->shape[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->value.size() : 0; }

std::span<const double> Tensor::data() const {
  RequireDefined(*this, "data");
  return node_->value;
}

std::span<double> Tensor::mutable_data() {
  RequireDefined(*this, "mutable_data");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return node_->value[0];
}

std::uint64_t TrainableLeavesCreated() { return trainable_leaves; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  RequireDefined(*this, "set_requires_grad");
  if (!node_->is_leaf()) {
    throw StateError("requires_grad can only be changed on leaf tensors");
  }
  if (value && !node_->requires_grad) ++trainable_leaves;
  node_->requires_grad = value;
  if (!value) node_->grad.clear();
}

bool Tensor::has_grad() const {
  return node_ && !node_->grad.empty() &&
         node_->grad.size() == node_->value.size();
}

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw StateError("tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) throw StateError("undefined tensor");
  return node_->EnsureGrad();
}

void Tensor::ZeroGrad() {
  if (node_) std::vector<double>().swap(node_->grad);
}

Tensor Tensor::Detach() const {
  return Tensor(NewLeaf(shape(), node_->value, false));
}

Tensor Tensor::Clone() const {
  return Tensor(NewLeaf(shape(), node_->value, node_->requires_grad));
}

// ---------------------------------------------------------------------------
// Tape.

bool GradEnabled() { return grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

std::vector<Node*> TopologicalOrder(const Tensor& root) {
  std::vector<Node*> order;
  if (!root.requires_grad()) return order;
  std::unordered_set<Node*> visited;
  // Iterative post-order DFS; (node, next input index).
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  return order;
}

void Backward(const Tensor& loss) {
  RequireDefined(loss, "Backward");
  if (loss.numel() != 1) {
    throw ShapeError("Backward requires a scalar loss, got shape " +
                     ShapeToString(loss.shape()));
  }
  std::vector<Node*> order = TopologicalOrder(loss);
  if (order.empty()) return;
  for (Node* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->value.size(), 0.0);
  }
  loss.node()->EnsureGrad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->is_leaf()) continue;
    node->backward(*node);
    std::vector<double>().swap(node->grad);
  }
}

// ---------------------------------------------------------------------------
// Ops.

namespace {

// C (rows x cols) = op(A) op(B) + beta C, all row-major and contiguous;
// op(A) is rows x inner and op(B) is inner x cols.
void Gemm(bool trans_a, bool trans_b, std::size_t rows, std::size_t cols,
          std::size_t inner, const double* a, const double* b, double beta,
          double* c) {
  static const bool single_threaded = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)single_threaded;
  if (rows == 0 || cols == 0) return;
  if (inner == 0) {
    for (std::size_t i = 0; i < rows * cols; ++i) c[i] *= beta;
    return;
  }
  const auto m = static_cast<blasint>(rows);
  const auto n = static_cast<blasint>(cols);
  const auto k = static_cast<blasint>(inner);
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, 1.0, a,
              trans_a ? m : k, b, trans_b ? k : n, beta, c, n);
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireDefined(a, "MatMul");
  RequireDefined(b, "MatMul");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  auto mismatch = [&]() {
    return ShapeError("MatMul: shape mismatch " + ShapeToString(sa) + " x " +
                      ShapeToString(sb));
  };
  if (sa.size() < 2 || sb.size() < 2) throw mismatch();
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa[sa.size() - 1];
  const std::size_t n = sb[sb.size() - 1];
  if (sb[sb.size() - 2] != k) throw mismatch();
  Shape lead_a(sa.begin(), sa.end() - 2);
  Shape lead_b(sb.begin(), sb.end() - 2);
  Shape lead;
  if (lead_a == lead_b || lead_b.empty()) {
    lead = lead_a;
  } else if (lead_a.empty()) {
    lead = lead_b;
  } else {
    throw mismatch();
  }
  const std::size_t batch = NumElements(lead);
  const bool bcast_a = lead_a.empty() && !lead.empty();
  const bool bcast_b = lead_b.empty() && !lead.empty();
  const std::size_t stride_a = bcast_a ? 0 : m * k;
  const std::size_t stride_b = bcast_b ? 0 : k * n;

  // A broadcast right operand lets the batch fold into the row dimension.
  const bool fold = bcast_b || batch == 1;
  const std::size_t rows = fold ? batch * m : m;
  const std::size_t calls = fold ? 1 : batch;

  std::vector<double> out(batch * m * n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t s = 0; s < calls; ++s) {
    Gemm(false, false, rows, n, k, pa + s * stride_a, pb + s * stride_b, 0.0,
         out.data() + s * m * n);
  }
  Shape out_shape = lead;
  out_shape.push_back(m);
  out_shape.push_back(n);
  return MakeResult(
      std::move(out_shape), std::move(out), {&a, &b},
      [=](Node& self) {
        Node& na = *self.inputs[0];
        Node& nb = *self.inputs[1];
        const double* G = self.grad.data();
        const double* A = na.value.data();
        const double* B = nb.value.data();
        if (na.requires_grad) {
          // dA += G B^T
          double* ga = na.EnsureGrad().data();
          for (std::size_t s = 0; s < calls; ++s) {
            Gemm(false, true, rows, k, n, G + s * m * n, B + s * stride_b, 1.0,
                 ga + s * stride_a);
          }
        }
        if (nb.requires_grad) {
          // dB += A^T G
          double* gb = nb.EnsureGrad().data();
          for (std::size_t s = 0; s < calls; ++s) {
            Gemm(true, false, k, n, rows, A + s * stride_a, G + s * m * n, 1.0,
                 gb + s * stride_b);
          }
        }
      });
}

namespace {

enum class Elementwise { kAdd, kSub, kMul };

Tensor ElementwiseOp(const Tensor& a, const Tensor& b, Elementwise kind,
                     const char* name) {
  RequireDefined(a, name);
  RequireDefined(b, name);
  const std::size_t repeat = SuffixRepeat(a, b, name);
  const std::size_t inner = b.numel();
  std::span<const double> va = a.data();
  std::span<const double> vb = b.data();
  std::vector<double> out(va.size());
  for (std::size_t r = 0; r < repeat; ++r) {
    const std::size_t base = r * inner;
    for (std::size_t j = 0; j < inner; ++j) {
      const double x = va[base + j];
      const double y = vb[j];
      switch (kind) {
        case Elementwise::kAdd: out[base + j] = x + y; break;
        case Elementwise::kSub: out[base + j] = x - y; break;
        case Elementwise::kMul: out[base + j] = x * y; break;
      }
    }
  }
  return MakeResult(a.shape(), std::move(out), {&a, &b}, [=](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    const std::vector<double>& g = self.grad;
    if (na.requires_grad) {
      auto& ga = na.EnsureGrad();
      if (kind == Elementwise::kMul) {
        for (std::size_t r = 0; r < repeat; ++r)
          for (std::size_t j = 0; j < inner; ++j)
            ga[r * inner + j] += g[r * inner + j] * nb.value[j];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
    }
    if (nb.requires_grad) {
      auto& gb = nb.EnsureGrad();
      for (std::size_t r = 0; r < repeat; ++r) {
        for (std::size_t j = 0; j < inner; ++j) {
          const double gi = g[r * inner + j];
          switch (kind) {
            case Elementwise::kAdd: gb[j] += gi; break;
            case Elementwise::kSub: gb[j] -= gi; break;
            case Elementwise::kMul: gb[j] += gi * na.value[r * inner + j]; break;
          }
        }
      }
    }
  });
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) {
  return ElementwiseOp(a, b, Elementwise::kAdd, "Add");
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  return ElementwiseOp(a, b, Elementwise::kSub, "Sub");
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  return ElementwiseOp(a, b, Elementwise::kMul, "Mul");
}

Tensor Scale(const Tensor& a, double factor) {
  RequireDefined(a, "Scale");
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  return MakeResult(a.shape(), std::move(out), {&a}, [factor](Node& self) {
    auto& ga = self.inputs[0]->EnsureGrad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * self.grad[i];
  });
}

Tensor Reshape(const Tensor& a, Shape shape) {
  RequireDefined(a, "Reshape");
  if (NumElements(shape) != a.numel()) {
    throw ShapeError("Reshape: cannot view " + ShapeToString(a.shape()) +
                     " as " + ShapeToString(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return MakeResult(std::move(shape), std::move(out), {&a}, [](Node& self) {
    auto& ga = self.inputs[0]->EnsureGrad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor Permute(const Tensor& a, const std::vector<std::size_t>& order) {
  RequireDefined(a, "Permute");
  const Shape& in_shape = a.shape();
  const std::size_t rank = in_shape.size();
  std::vector<std::size_t> check(order);
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < check.size(); ++i) {
    if (check.size() != rank || check[i] != i) {
      throw ShapeError("Permute: invalid axis order for shape " +
                       ShapeToString(in_shape));
    }
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) {
    in_strides[i - 1] = in_strides[i] * in_shape[i];
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = in_shape[order[i]];

  // Source index of every output element, walked with an odometer.
  const std::size_t total = a.numel();
  auto source = std::make_shared<std::vector<std::size_t>>(total);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    (*source)[flat] = src;
    for (std::size_t d = rank; d-- > 0;) {
      src += in_strides[order[d]];
      if (++counter[d] < out_shape[d]) break;
      src -= in_strides[order[d]] * out_shape[d];
      counter[d] = 0;
    }
  }
  std::span<const double> va = a.data();
  std::vector<double> out(total);
  for (std::size_t i = 0; i < total; ++i) out[i] = va[(*source)[i]];
  return MakeResult(std::move(out_shape), std::move(out), {&a},
                    [source](Node& self) {
                      auto& ga = self.inputs[0]->EnsureGrad();
                      for (std::size_t i = 0; i < source->size(); ++i) {
                        ga[(*source)[i]] += self.grad[i];
                      }
                    });
}

Tensor Transpose(const Tensor& a) {
  RequireDefined(a, "Transpose");
  if (a.rank() < 2) {
    throw ShapeError("Transpose: needs rank >= 2, got " +
                     ShapeToString(a.shape()));
  }
  std::vector<std::size_t> order(a.rank());
  std::iota(order.begin(), order.end(), 0);
  std::swap(order[a.rank() - 1], order[a.rank() - 2]);
  return Permute(a, order);
}

Tensor Expand(const Tensor& a, std::size_t count) {
  RequireDefined(a, "Expand");
  if (count == 0) throw ShapeError("Expand: count must be positive");
  const std::size_t inner = a.numel();
  std::vector<double> out;
  out.reserve(count * inner);
  for (std::size_t r = 0; r < count; ++r) {
    out.insert(out.end(), a.data().begin(), a.data().end());
  }
  Shape shape = a.shape();
  shape.insert(shape.begin(), count);
  return MakeResult(std::move(shape), std::move(out), {&a},
                    [count, inner](Node& self) {
                      auto& ga = self.inputs[0]->EnsureGrad();
                      for (std::size_t r = 0; r < count; ++r)
                        for (std::size_t j = 0; j < inner; ++j)
                          ga[j] += self.grad[r * inner + j];
                    });
}

Tensor Concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("Concat: no inputs");
  for (const Tensor& p : parts) RequireDefined(p, "Concat");
  const Shape& first = parts[0].shape();
  CheckAxis(parts[0], axis, "Concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) ok = false;
    }
    if (!ok) {
      throw ShapeError("Concat: shape mismatch " + ShapeToString(first) +
                       " vs " + ShapeToString(s));
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit split = SplitAt(out_shape, axis);
  std::vector<std::size_t> chunk(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    chunk[i] = parts[i].shape()[axis] * split.inner;
  }
  const std::size_t row = split.length * split.inner;
  std::vector<double> out(split.outer * row);
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::size_t offset = o * row;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double* src = parts[i].data().data() + o * chunk[i];
      std::copy(src, src + chunk[i], out.begin() + offset);
      offset += chunk[i];
    }
  }
  const std::size_t outer = split.outer;
  return MakeResult(std::move(out_shape), std::move(out), parts,
                    [chunk, row, outer](Node& self) {
                      for (std::size_t o = 0; o < outer; ++o) {
                        std::size_t offset = o * row;
                        for (std::size_t i = 0; i < chunk.size(); ++i) {
                          Node& in = *self.inputs[i];
                          if (in.requires_grad) {
                            auto& gi = in.EnsureGrad();
                            for (std::size_t j = 0; j < chunk[i]; ++j) {
                              gi[o * chunk[i] + j] += self.grad[offset + j];
                            }
                          }
                          offset += chunk[i];
                        }
                      }
                    });
}

Tensor Slice(const Tensor& a, std::size_t axis, std::size_t begin,
             std::size_t end) {
  RequireDefined(a, "Slice");
  CheckAxis(a, axis, "Slice");
  if (begin > end || end > a.shape()[axis]) {
    throw ShapeError("Slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of bounds for shape " +
                     ShapeToString(a.shape()));
  }
  const AxisSplit split = SplitAt(a.shape(), axis);
  const std::size_t in_row = split.length * split.inner;
  const std::size_t out_row = (end - begin) * split.inner;
  const std::size_t skip = begin * split.inner;
  std::vector<double> out(split.outer * out_row);
  std::span<const double> va = a.data();
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy(va.begin() + o * in_row + skip,
              va.begin() + o * in_row + skip + out_row,
              out.begin() + o * out_row);
  }
  Shape shape = a.shape();
  shape[axis] = end - begin;
  const std::size_t outer = split.outer;
  return MakeResult(std::move(shape), std::move(out), {&a},
                    [=](Node& self) {
                      auto& ga = self.inputs[0]->EnsureGrad();
                      for (std::size_t o = 0; o < outer; ++o)
                        for (std::size_t j = 0; j < out_row; ++j)
                          ga[o * in_row + skip + j] +=
                              self.grad[o * out_row + j];
                    });
}

Tensor Softmax(const Tensor& x, std::size_t axis) {
  RequireDefined(x, "Softmax");
  CheckAxis(x, axis, "Softmax");
  const AxisSplit s = SplitAt(x.shape(), axis);
  std::span<const double> vx = x.data();
  std::vector<double> out(vx.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.length * s.inner + i;
      double max = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < s.length; ++l)
        max = std::max(max, vx[base + l * s.inner]);
      double total = 0.0;
      for (std::size_t l = 0; l < s.length; ++l) {
        const double e = std::exp(vx[base + l * s.inner] - max);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.length; ++l)
        out[base + l * s.inner] /= total;
    }
  }
  return MakeResult(x.shape(), std::move(out), {&x}, [s](Node& self) {
    const std::vector<double>& y = self.value;
    auto& gx = self.inputs[0]->EnsureGrad();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.length * s.inner + i;
        double dot = 0.0;
        for (std::size_t l = 0; l < s.length; ++l) {
          const std::size_t at = base + l * s.inner;
          dot += self.grad[at] * y[at];
        }
        for (std::size_t l = 0; l < s.length; ++l) {
          const std::size_t at = base + l * s.inner;
          gx[at] += y[at] * (self.grad[at] - dot);
        }
      }
    }
  });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps) {
  RequireDefined(x, "LayerNorm");
  if (x.rank() < 1) throw ShapeError("LayerNorm: rank-0 input");
  const std::size_t d = x.shape().back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("LayerNorm: affine shape mismatch " +
                     ShapeToString(x.shape()) + " vs " +
                     ShapeToString(gamma.shape()));
  }
  const std::size_t rows = x.numel() / d;
  std::span<const double> vx = x.data();
  std::span<const double> vg = gamma.data();
  std::span<const double> vb = beta.data();
  auto xhat = std::make_shared<std::vector<double>>(vx.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(vx.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = vx.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mean) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = vg[j] * h + vb[j];
    }
  }
  return MakeResult(
      x.shape(), std::move(out), {&x, &gamma, &beta},
      [=](Node& self) {
        Node& nx = *self.inputs[0];
        Node& ng = *self.inputs[1];
        Node& nb = *self.inputs[2];
        const std::vector<double>& g = self.grad;
        if (ng.requires_grad) {
          auto& gg = ng.EnsureGrad();
          for (std::size_t i = 0; i < g.size(); ++i) gg[i % d] += g[i] * (*xhat)[i];
        }
        if (nb.requires_grad) {
          auto& gb = nb.EnsureGrad();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
        }
        if (nx.requires_grad) {
          auto& gx = nx.EnsureGrad();
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t r = 0; r < rows; ++r) {
            double sum_dh = 0.0;
            double sum_dh_h = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = g[r * d + j] * ng.value[j];
              sum_dh += dh;
              sum_dh_h += dh * (*xhat)[r * d + j];
            }
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = g[r * d + j] * ng.value[j];
              gx[r * d + j] += (*inv_std)[r] *
                               (dh - sum_dh * inv_d -
                                (*xhat)[r * d + j] * sum_dh_h * inv_d);
            }
          }
        }
      });
}

Tensor Relu(const Tensor& x) {
  RequireDefined(x, "Relu");
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return MakeResult(x.shape(), std::move(out), {&x}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto& gx = in.EnsureGrad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (in.value[i] > 0.0) gx[i] += self.grad[i];
    }
  });
}

namespace {
double StableSigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}
}  // namespace

Tensor Sigmoid(const Tensor& x) {
  RequireDefined(x, "Sigmoid");
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = StableSigmoid(v);
  return MakeResult(x.shape(), std::move(out), {&x}, [](Node& self) {
    auto& gx = self.inputs[0]->EnsureGrad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double y = self.value[i];
      gx[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor Sum(const Tensor& x) {
  RequireDefined(x, "Sum");
  double total = 0.0;
  for (double v : x.data()) total += v;
  return MakeResult({}, {total}, {&x}, [](Node& self) {
    auto& gx = self.inputs[0]->EnsureGrad();
    for (double& g : gx) g += self.grad[0];
  });
}

Tensor Mean(const Tensor& x) {
  RequireDefined(x, "Mean");
  if (x.numel() == 0) throw ShapeError("Mean: empty tensor");
  return Scale(Sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor MseLoss(const Tensor& prediction, const Tensor& target) {
  RequireDefined(prediction, "MseLoss");
  RequireDefined(target, "MseLoss");
  if (prediction.shape() != target.shape()) {
    throw ShapeError("MseLoss: shape mismatch " +
                     ShapeToString(prediction.shape()) + " vs " +
                     ShapeToString(target.shape()));
  }
  const std::size_t n = prediction.numel();
  if (n == 0) throw ShapeError("MseLoss: empty input");
  std::span<const double> p = prediction.data();
  std::span<const double> t = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (p[i] - t[i]) * (p[i] - t[i]);
  return MakeResult({}, {total / static_cast<double>(n)},
                    {&prediction, &target}, [n](Node& self) {
                      Node& np = *self.inputs[0];
                      Node& nt = *self.inputs[1];
                      const double scale =
                          2.0 * self.grad[0] / static_cast<double>(n);
                      if (np.requires_grad) {
                        auto& gp = np.EnsureGrad();
                        for (std::size_t i = 0; i < n; ++i)
                          gp[i] += scale * (np.value[i] - nt.value[i]);
                      }
                      if (nt.requires_grad) {
                        auto& gt = nt.EnsureGrad();
                        for (std::size_t i = 0; i < n; ++i)
                          gt[i] -= scale * (np.value[i] - nt.value[i]);
                      }
                    });
}

Tensor BinaryCrossEntropyLoss(const Tensor& logits, const Tensor& target) {
  RequireDefined(logits, "BinaryCrossEntropyLoss");
  RequireDefined(target, "BinaryCrossEntropyLoss");
  if (logits.shape() != target.shape()) {
    throw ShapeError("BinaryCrossEntropyLoss: shape mismatch " +
                     ShapeToString(logits.shape()) + " vs " +
                     ShapeToString(target.shape()));
  }
  const std::size_t n = logits.numel();
  if (n == 0) throw ShapeError("BinaryCrossEntropyLoss: empty input");
  std::span<const double> z = logits.data();
  std::span<const double> y = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += std::max(z[i], 0.0) - z[i] * y[i] +
             std::log1p(std::exp(-std::abs(z[i])));
  }
  return MakeResult({}, {total / static_cast<double>(n)}, {&logits, &target},
                    [n](Node& self) {
                      Node& nz = *self.inputs[0];
                      Node& ny = *self.inputs[1];
                      const double scale =
                          self.grad[0] / static_cast<double>(n);
                      if (nz.requires_grad) {
                        auto& gz = nz.EnsureGrad();
                        for (std::size_t i = 0; i < n; ++i)
                          gz[i] += scale *
                                   (StableSigmoid(nz.value[i]) - ny.value[i]);
                      }
                      if (ny.requires_grad) {
                        auto& gy = ny.EnsureGrad();
                        for (std::size_t i = 0; i < n; ++i)
                          gy[i] -= scale * nz.value[i];
                      }
                    });
}

Tensor MaskScores(const Tensor& scores, const AttentionMask& mask) {
  RequireDefined(scores, "MaskScores");
  if (mask.empty()) return scores;
  const Shape& s = scores.shape();
  if (s.size() != 4) {
    throw ShapeError("MaskScores: expected [batch, heads, queries, keys], got " +
                     ShapeToString(s));
  }
  const std::size_t batch = s[0], heads = s[1], queries = s[2], keys = s[3];
  if (!mask.key_valid.empty() &&
      (mask.key_count != keys || mask.key_valid.size() != batch * keys)) {
    throw ShapeError("MaskScores: key mask does not match scores " +
                     ShapeToString(s));
  }
  if (mask.causal && queries != keys) {
    throw ShapeError("MaskScores: causal mask needs square scores, got " +
                     ShapeToString(s));
  }
  if (mask.causal && (mask.causal_block == 0 || keys % mask.causal_block != 0)) {
    throw ShapeError("MaskScores: causal block " +
                     std::to_string(mask.causal_block) + " does not divide " +
                     std::to_string(keys) + " keys");
  }
  const std::size_t block = std::max<std::size_t>(mask.causal_block, 1);
  auto blocked = std::make_shared<std::vector<unsigned char>>(scores.numel(), 0);
  std::vector<double> out(scores.data().begin(), scores.data().end());
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::size_t at = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t q = 0; q < queries; ++q)
        for (std::size_t k = 0; k < keys; ++k, ++at) {
          bool off = mask.causal && k / block > q / block;
          if (!mask.key_valid.empty() && !mask.key_valid[b * keys + k])
            off = true;
          if (off) {
            (*blocked)[at] = 1;
            out[at] = neg_inf;
          }
        }
  return MakeResult(s, std::move(out), {&scores}, [blocked](Node& self) {
    auto& gx = self.inputs[0]->EnsureGrad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (!(*blocked)[i]) gx[i] += self.grad[i];
    }
  });
}

}  // namespace tempo
