// Copyright 2026 The rpk Authors. All Rights Reserved.
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

// Differentiable primitives over Tape values. Each op checks shapes, computes
// the forward value eagerly and records the vector-Jacobian product.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpk/errors.hpp"
#include "rpk/numerics/tape.hpp"
#include "rpk/numerics/tensor.hpp"

namespace rpk::ad {

namespace detail {

inline void accumulate(Tensor* slot, const Tensor& g) {
  if (!slot) return;
  auto dst = slot->data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     to_string(t.shape()));
  }
}

}  // namespace detail

inline Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return a.tape().record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> s) {
    detail::accumulate(s[0], g);
    detail::accumulate(s[1], g);
  });
}

inline Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return a.tape().record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> s) {
    detail::accumulate(s[0], g);
    if (s[1]) {
      auto d = s[1]->data();
      auto gv = g.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= gv[i];
    }
  });
}

// Elementwise (Hadamard) product.
inline Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  Tape& tape = a.tape();
  ValuePtr av = tape.value_ptr(a), bp = tape.value_ptr(b);
  return tape.record(std::move(out), {a, b}, [av, bp](const Tensor& g, std::span<Tensor* const> s) {
    auto gv = g.data();
    if (s[0]) {
      auto d = s[0]->data();
      auto x = bp->data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * x[i];
    }
    if (s[1]) {
      auto d = s[1]->data();
      auto x = av->data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * x[i];
    }
  });
}

inline Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return a.tape().record(std::move(out), {a}, [factor](const Tensor& g, std::span<Tensor* const> s) {
    auto d = s[0]->data();
    auto gv = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * gv[i];
  });
}

inline Var tanh(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  auto y = std::make_shared<const Tensor>(out);
  return a.tape().record(std::move(out), {a}, [y](const Tensor& g, std::span<Tensor* const> s) {
    auto d = s[0]->data();
    auto gv = g.data();
    auto yv = y->data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * (1.0 - yv[i] * yv[i]);
  });
}

inline Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape().record(std::move(out), {a}, [](const Tensor& g, std::span<Tensor* const> s) {
    auto d = s[0]->data();
    auto gv = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i];
  });
}

// [n,p] x [p,q] -> [n,q]
inline Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_rank(av, 2, "matmul");
  detail::require_rank(bv, 2, "matmul");
  if (av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul: shape " + to_string(av.shape()) + " incompatible with " + to_string(bv.shape()));
  }
  const std::size_t n = av.dim(0), p = av.dim(1), q = bv.dim(1);
  Tensor out(Shape{n, q}, 0.0);
  const double* A = av.data().data();
  const double* B = bv.data().data();
  double* O = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = O + i * q;
    for (std::size_t k = 0; k < p; ++k) {
      const double aik = A[i * p + k];
      if (aik == 0.0) continue;
      const double* brow = B + k * q;
      for (std::size_t j = 0; j < q; ++j) orow[j] += aik * brow[j];
    }
  }
  Tape& tape = a.tape();
  ValuePtr ap = tape.value_ptr(a), bp = tape.value_ptr(b);
  return tape.record(std::move(out), {a, b}, [ap, bp, n, p, q](const Tensor& g, std::span<Tensor* const> s) {
    const double* G = g.data().data();
    const double* A = ap->data().data();
    const double* B = bp->data().data();
    if (s[0]) {
      double* dA = s[0]->data().data();
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = G + i * q;
        for (std::size_t k = 0; k < p; ++k) {
          const double* brow = B + k * q;
          double acc = 0.0;
          for (std::size_t j = 0; j < q; ++j) acc += grow[j] * brow[j];
          dA[i * p + k] += acc;
        }
      }
    }
    if (s[1]) {
      double* dB = s[1]->data().data();
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = G + i * q;
        for (std::size_t k = 0; k < p; ++k) {
          const double aik = A[i * p + k];
          double* drow = dB + k * q;
          for (std::size_t j = 0; j < q; ++j) drow[j] += aik * grow[j];
        }
      }
    }
  });
}

inline Var transpose(const Var& a) {
  const Tensor& av = a.value();
  detail::require_rank(av, 2, "transpose");
  const std::size_t n = av.dim(0), m = av.dim(1);
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(j, i) = av.at(i, j);
  return a.tape().record(std::move(out), {a}, [n, m](const Tensor& g, std::span<Tensor* const> s) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) s[0]->at(i, j) += g.at(j, i);
  });
}

// Adds `row` to every leading-axis slice of `a` (bias-row broadcast).
inline Var add_row(const Var& a, const Var& row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (av.rank() < 1 || av.dim(0) == 0 || av.size() / av.dim(0) != rv.size()) {
    throw ShapeError("add_row: row of shape " + to_string(rv.shape()) + " does not broadcast over " +
                     to_string(av.shape()));
  }
  const std::size_t n = av.dim(0), w = rv.size();
  Tensor out = av;
  auto o = out.data();
  auto r = rv.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) o[i * w + j] += r[j];
  return a.tape().record(std::move(out), {a, row}, [n, w](const Tensor& g, std::span<Tensor* const> s) {
    detail::accumulate(s[0], g);
    if (s[1]) {
      auto d = s[1]->data();
      auto gv = g.data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) d[j] += gv[i * w + j];
    }
  });
}

// Rows of `table` [V,e] selected by `indices`; gradient scatter-adds back into
// the referenced rows only.
inline Var gather_rows(const Var& table, std::vector<std::size_t> indices) {
  const Tensor& tv = table.value();
  detail::require_rank(tv, 2, "gather_rows");
  const std::size_t rows = tv.dim(0), e = tv.dim(1);
  Tensor out(Shape{indices.size(), e});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw ShapeError("gather_rows: index " + std::to_string(indices[i]) + " out of range for table of shape " +
                       to_string(tv.shape()));
    }
    auto src = tv.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return table.tape().record(std::move(out), {table},
                             [idx = std::move(indices), e](const Tensor& g, std::span<Tensor* const> s) {
                               auto d = s[0]->data();
                               auto gv = g.data();
                               for (std::size_t i = 0; i < idx.size(); ++i)
                                 for (std::size_t j = 0; j < e; ++j) d[idx[i] * e + j] += gv[i * e + j];
                             });
}

// Mean over consecutive row segments: [sum(lengths), e] -> [lengths.size(), e].
inline Var segment_mean(const Var& a, std::vector<std::size_t> lengths) {
  const Tensor& av = a.value();
  detail::require_rank(av, 2, "segment_mean");
  std::size_t total = 0;
  for (auto l : lengths) {
    if (l == 0) throw ShapeError("segment_mean: empty segment");
    total += l;
  }
  if (total != av.dim(0)) {
    throw ShapeError("segment_mean: segment lengths sum to " + std::to_string(total) + " but input has shape " +
                     to_string(av.shape()));
  }
  const std::size_t e = av.dim(1);
  Tensor out(Shape{lengths.size(), e}, 0.0);
  std::size_t r = 0;
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    auto orow = out.row(b);
    for (std::size_t t = 0; t < lengths[b]; ++t, ++r) {
      auto irow = av.row(r);
      for (std::size_t j = 0; j < e; ++j) orow[j] += irow[j];
    }
    for (double& v : orow) v /= static_cast<double>(lengths[b]);
  }
  return a.tape().record(std::move(out), {a},
                         [ls = std::move(lengths), e](const Tensor& g, std::span<Tensor* const> s) {
                           std::size_t r = 0;
                           for (std::size_t b = 0; b < ls.size(); ++b) {
                             const double inv = 1.0 / static_cast<double>(ls[b]);
                             auto grow = g.row(b);
                             for (std::size_t t = 0; t < ls[b]; ++t, ++r) {
                               auto d = s[0]->row(r);
                               for (std::size_t j = 0; j < e; ++j) d[j] += grow[j] * inv;
                             }
                           }
                         });
}

inline Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape().record(Tensor::scalar(total), {a}, [](const Tensor& g, std::span<Tensor* const> s) {
    const double gv = g.item();
    for (double& d : s[0]->data()) d += gv;
  });
}

// [n,k] -> [n]
inline Var sum_rows(const Var& a) {
  const Tensor& av = a.value();
  detail::require_rank(av, 2, "sum_rows");
  const std::size_t n = av.dim(0), k = av.dim(1);
  Tensor out(Shape{n}, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i] += av.at(i, j);
  return a.tape().record(std::move(out), {a}, [n, k](const Tensor& g, std::span<Tensor* const> s) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) s[0]->at(i, j) += g[i];
  });
}

// Each row scaled to unit L2 norm. Zero rows are an error.
inline Var l2_normalize_rows(const Var& a) {
  const Tensor& av = a.value();
  if (av.rank() != 1 && av.rank() != 2) {
    throw ShapeError("l2_normalize_rows: expected a vector or matrix, got shape " + to_string(av.shape()));
  }
  const std::size_t n = av.rank() == 1 ? 1 : av.dim(0);
  const std::size_t k = av.size() / std::max<std::size_t>(n, 1);
  Tensor out = av;
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = out.data().subspan(i * k, k);
    norms[i] = l2_norm(r);
    if (!std::isfinite(norms[i])) throw NumericError("l2_normalize_rows: row " + std::to_string(i) + " is not finite");
    if (!(norms[i] > 0.0)) throw NumericError("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
    for (double& v : r) v /= norms[i];
  }
  auto y = std::make_shared<const Tensor>(out);
  return a.tape().record(std::move(out), {a},
                         [y, nrm = std::move(norms), n, k](const Tensor& g, std::span<Tensor* const> s) {
                           for (std::size_t i = 0; i < n; ++i) {
                             auto yr = y->data().subspan(i * k, k);
                             auto gr = g.data().subspan(i * k, k);
                             auto d = s[0]->data().subspan(i * k, k);
                             const double proj = dot(yr, gr);
                             for (std::size_t j = 0; j < k; ++j) d[j] += (gr[j] - yr[j] * proj) / nrm[i];
                           }
                         });
}

// Row-wise cosine similarity of two [n,k] matrices -> [n].
inline Var cosine_similarity(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "cosine_similarity");
  const bool vec = a.value().rank() == 1;
  Var an = l2_normalize_rows(a), bn = l2_normalize_rows(b);
  if (vec) {
    const std::size_t k = a.value().size();
    an = reshape(an, {1, k});
    bn = reshape(bn, {1, k});
  }
  return sum_rows(mul(an, bn));
}

// Mean over rows of -log softmax(logits)[row, target].
inline Var softmax_cross_entropy(const Var& logits, std::vector<std::size_t> targets) {
  const Tensor& lv = logits.value();
  detail::require_rank(lv, 2, "softmax_cross_entropy");
  const std::size_t n = lv.dim(0), m = lv.dim(1);
  if (targets.size() != n || n == 0) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for logits of shape " +
                     to_string(lv.shape()));
  }
  Tensor probs(Shape{n, m});
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= m) throw ShapeError("softmax_cross_entropy: target out of range");
    auto row = lv.row(i);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      probs.at(i, j) = std::exp(row[j] - mx);
      z += probs.at(i, j);
    }
    for (std::size_t j = 0; j < m; ++j) probs.at(i, j) /= z;
    loss += -(row[targets[i]] - mx - std::log(z));
  }
  loss /= static_cast<double>(n);
  return logits.tape().record(
      Tensor::scalar(loss), {logits},
      [p = std::move(probs), t = std::move(targets), n, m](const Tensor& g, std::span<Tensor* const> s) {
        const double scale = g.item() / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j)
            s[0]->at(i, j) += scale * (p.at(i, j) - (j == t[i] ? 1.0 : 0.0));
      });
}

}  // namespace rpk::ad
