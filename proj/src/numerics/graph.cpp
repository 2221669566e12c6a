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

#include "hatemtl/numerics/graph.hpp"

#include <algorithm>
#include <cmath>

#include "hatemtl/error.hpp"

namespace hatemtl::num {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ContractViolation(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                          shape_string(b.shape()));
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return {rows, cols}; }

}  // namespace

Var parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->grad.assign(value.numel(), 0.0);
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return node;
}

void zero_grad(std::span<const Var> params) {
  for (const auto& p : params) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

template <class F>
Var Graph::emit(Tensor value, std::span<const Var> inputs, F&& backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = recording_ && std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v->requires_grad; });
  if (node->requires_grad) {
    node->grad.assign(node->value.numel(), 0.0);
    node->backward = std::forward<F>(backward);
    tape_.push_back(node);
  }
  return node;
}

Var Graph::record(Tensor value, std::span<const Var> inputs, std::function<void(Node&)> backward) {
  return emit(std::move(value), inputs, std::move(backward));
}

Var Graph::matmul(const Var& a, const Var& b) {
  const Tensor& A = a->value;
  const Tensor& B = b->value;
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rank() > 2 || B.rows() != k) shape_error("matmul", A, B);
  Tensor out(matrix_shape(m, n));
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      const double* brow = &B[p * n];
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  const Var inputs[] = {a, b};
  return emit(std::move(out), inputs, [a, b, m, k, n](Node& self) {
    const auto& g = self.grad;
    const auto& Av = a->value;
    const auto& Bv = b->value;
    if (a->requires_grad) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * Bv[p * n + j];
          a->grad[i * k + p] += s;
        }
      }
    }
    if (b->requires_grad) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = Av[i * k + p];
          double* brow = &b->grad[p * n];
          for (std::size_t j = 0; j < n; ++j) brow[j] += aip * g[i * n + j];
        }
      }
    }
  });
}

Var Graph::add(const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) shape_error("add", a->value, b->value);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
  const Var inputs[] = {a, b};
  return emit(std::move(out), inputs, [a, b](Node& self) {
    for (const auto& in : {a, b}) {
      if (!in->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
    }
  });
}

Var Graph::mul(const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) shape_error("mul", a->value, b->value);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
  const Var inputs[] = {a, b};
  return emit(std::move(out), inputs, [a, b](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (a->requires_grad) a->grad[i] += self.grad[i] * b->value[i];
      if (b->requires_grad) b->grad[i] += self.grad[i] * a->value[i];
    }
  });
}

Var Graph::add_row(const Var& a, const Var& bias) {
  const std::size_t n = a->value.cols();
  if (bias->value.numel() != n) shape_error("add_row", a->value, bias->value);
  Tensor out = a->value;
  const std::size_t m = out.rows();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias->value[j];
  const Var inputs[] = {a, bias};
  return emit(std::move(out), inputs, [a, bias, m, n](Node& self) {
    if (a->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
    if (bias->requires_grad)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) bias->grad[j] += self.grad[i * n + j];
  });
}

Var Graph::scale(const Var& a, double factor) {
  Tensor out = a->value;
  for (auto& x : out.values()) x *= factor;
  const Var inputs[] = {a};
  return emit(std::move(out), inputs, [a, factor](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * factor;
  });
}

Var Graph::tanh(const Var& a) {
  Tensor out = a->value;
  for (auto& x : out.values()) x = std::tanh(x);
  const Var inputs[] = {a};
  return emit(std::move(out), inputs, [a](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      a->grad[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Var Graph::relu(const Var& a) {
  Tensor out = a->value;
  for (auto& x : out.values()) x = x > 0.0 ? x : 0.0;
  const Var inputs[] = {a};
  return emit(std::move(out), inputs, [a](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (a->value[i] > 0.0) a->grad[i] += self.grad[i];
  });
}

Var Graph::layer_norm(const Var& x, const Var& gain, const Var& offset, double eps) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  if (gain->value.numel() != n) shape_error("layer_norm", x->value, gain->value);
  if (offset->value.numel() != n) shape_error("layer_norm", x->value, offset->value);
  std::vector<double> normed(m * n), inv_std(m);
  Tensor out(x->value.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &x->value[i * n];
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      normed[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = normed[i * n + j] * gain->value[j] + offset->value[j];
    }
  }
  const Var inputs[] = {x, gain, offset};
  return emit(std::move(out), inputs,
                [x, gain, offset, m, n, normed = std::move(normed), inv_std = std::move(inv_std)](Node& self) {
                  const auto& g = self.grad;
                  std::vector<double> dnorm(n);
                  for (std::size_t i = 0; i < m; ++i) {
                    double sum_d = 0.0, sum_dx = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                      const double gij = g[i * n + j];
                      if (gain->requires_grad) gain->grad[j] += gij * normed[i * n + j];
                      if (offset->requires_grad) offset->grad[j] += gij;
                      dnorm[j] = gij * gain->value[j];
                      sum_d += dnorm[j];
                      sum_dx += dnorm[j] * normed[i * n + j];
                    }
                    if (!x->requires_grad) continue;
                    const double nn = static_cast<double>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                      x->grad[i * n + j] +=
                          inv_std[i] / nn * (nn * dnorm[j] - sum_d - normed[i * n + j] * sum_dx);
                    }
                  }
                });
}

Var Graph::gather_rows(const Var& table, std::span<const int> ids) {
  const std::size_t rows = table->value.rows(), n = table->value.cols();
  std::vector<int> idx(ids.begin(), ids.end());
  Tensor out(matrix_shape(idx.size(), n));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= rows) {
      throw ContractViolation("gather_rows: index " + std::to_string(idx[i]) + " out of range for shape " +
                              shape_string(table->value.shape()));
    }
    std::copy_n(&table->value[static_cast<std::size_t>(idx[i]) * n], n, &out[i * n]);
  }
  const Var inputs[] = {table};
  return emit(std::move(out), inputs, [table, n, idx = std::move(idx)](Node& self) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double* dst = &table->grad[static_cast<std::size_t>(idx[i]) * n];
      for (std::size_t j = 0; j < n; ++j) dst[j] += self.grad[i * n + j];
    }
  });
}

Var Graph::transpose(const Var& a) {
  const std::size_t m = a->value.rows(), n = a->value.cols();
  Tensor out(matrix_shape(n, m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a->value[i * n + j];
  const Var inputs[] = {a};
  return emit(std::move(out), inputs, [a, m, n](Node& self) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) a->grad[i * n + j] += self.grad[j * m + i];
  });
}

Var Graph::softmax_rows(const Var& a) {
  const std::size_t m = a->value.rows(), n = a->value.cols();
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < m; ++i) {
    auto p = softmax(std::span<const double>(&a->value[i * n], n));
    std::copy(p.begin(), p.end(), &out[i * n]);
  }
  const Var inputs[] = {a};
  return emit(std::move(out), inputs, [a, m, n](Node& self) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = &self.value[i * n];
      const double* g = &self.grad[i * n];
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) a->grad[i * n + j] += y[j] * (g[j] - dot);
    }
  });
}

Var Graph::attention(const Var& q, const Var& k, const Var& v) {
  if (q->value.cols() != k->value.cols()) shape_error("attention", q->value, k->value);
  if (k->value.rows() != v->value.rows()) shape_error("attention", k->value, v->value);
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(q->value.cols()));
  auto scores = scale(matmul(q, transpose(k)), scale_factor);
  return matmul(softmax_rows(scores), v);
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractViolation("concat_cols: no operands");
  const std::size_t m = parts[0]->value.rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p->value.rows() != m) shape_error("concat_cols", parts[0]->value, p->value);
    widths.push_back(p->value.cols());
    total += widths.back();
  }
  Tensor out(matrix_shape(m, total));
  std::size_t offset = 0;
  for (std::size_t t = 0; t < parts.size(); ++t) {
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(&parts[t]->value[i * widths[t]], widths[t], &out[i * total + offset]);
    offset += widths[t];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return emit(std::move(out), parts, [inputs, widths, m, total](Node& self) {
    std::size_t off = 0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      if (inputs[t]->requires_grad) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[t]; ++j)
            inputs[t]->grad[i * widths[t] + j] += self.grad[i * total + off + j];
      }
      off += widths[t];
    }
  });
}

Var Graph::mean(const Var& a, int axis) {
  const std::size_t m = a->value.rows(), n = a->value.cols();
  if (axis != 0 && axis != 1) throw ContractViolation("mean: axis must be 0 or 1");
  Tensor out(axis == 0 ? matrix_shape(1, n) : matrix_shape(m, 1));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[axis == 0 ? j : i] += a->value[i * n + j];
  for (auto& x : out.values()) x /= static_cast<double>(axis == 0 ? m : n);
  const Var inputs[] = {a};
  return emit(std::move(out), inputs, [a, m, n, axis](Node& self) {
    const double inv = 1.0 / static_cast<double>(axis == 0 ? m : n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) a->grad[i * n + j] += self.grad[axis == 0 ? j : i] * inv;
  });
}

Var Graph::sum(std::span<const Var> scalars) {
  double total = 0.0;
  for (const auto& s : scalars) {
    if (s->value.numel() != 1) throw ContractViolation("sum: operand of shape " + shape_string(s->value.shape()) + " is not a scalar");
    total += s->value[0];
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return emit(Tensor::scalar(total), scalars, [inputs](Node& self) {
    for (const auto& in : inputs)
      if (in->requires_grad) in->grad[0] += self.grad[0];
  });
}

Var Graph::cross_entropy(const Var& probs, std::size_t gold, double clip) {
  if (gold >= probs->value.numel()) {
    throw ContractViolation("cross_entropy: gold index " + std::to_string(gold) + " out of range for shape " +
                            shape_string(probs->value.shape()));
  }
  const double p = probs->value[gold];
  const Var inputs[] = {probs};
  return emit(Tensor::scalar(-std::log(std::max(p, clip))), inputs, [probs, gold, p, clip](Node& self) {
    if (p > clip) probs->grad[gold] -= self.grad[0] / p;
  });
}

void Graph::backward(const Var& loss) {
  if (loss->value.numel() != 1) {
    throw ContractViolation("backward: loss must be a scalar, got shape " + shape_string(loss->value.shape()));
  }
  if (loss->requires_grad) {
    loss->grad[0] += 1.0;
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
      Node& node = **it;
      if (node.backward) node.backward(node);
    }
  }
  tape_.clear();
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (auto& p : out) p /= total;
  return out;
}

double cross_entropy(std::span<const double> probs, std::size_t gold, double clip) {
  if (gold >= probs.size()) throw ContractViolation("cross_entropy: gold index out of range");
  return -std::log(std::max(probs[gold], clip));
}

}  // namespace hatemtl::num
