/*
 * Copyright 2026 The varl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "varl/ops.hpp"

#include <cmath>

namespace varl {
namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError(op, a.shape(), b.shape());
}

void require_finite(const char* op, const Tensor& a) {
  if (!a.data().allFinite()) {
    throw std::domain_error(std::string(op) + ": non-finite input");
  }
}

// Rows/cols for the "vector or row-wise matrix" ops.
std::pair<Eigen::Index, Eigen::Index> rows_cols(const char* op, const Tensor& a) {
  if (a.rank() == 1) return {1, a.dim(0)};
  if (a.rank() == 2) return {a.dim(0), a.dim(1)};
  throw ShapeError(std::string(op) + " needs rank 1 or 2, got " +
                   to_string(a.shape()));
}

template <class Forward, class Derivative>
Tensor unary(const Tensor& a, Forward forward, Derivative derivative) {
  Vector out = a.data().unaryExpr(forward);
  Vector in = a.data();
  Vector y = out;
  return Tape::record(a.shape(), std::move(out), {&a},
                      [in = std::move(in), y = std::move(y), derivative](
                          const Vector& g, std::span<Vector*> gi) {
                        for (Eigen::Index i = 0; i < g.size(); ++i) {
                          (*gi[0])[i] += g[i] * derivative(in[i], y[i]);
                        }
                      });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  return Tape::record(a.shape(), a.data() + b.data(), {&a, &b},
                      [](const Vector& g, std::span<Vector*> gi) {
                        if (gi[0]) *gi[0] += g;
                        if (gi[1]) *gi[1] += g;
                      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  return Tape::record(a.shape(), a.data() - b.data(), {&a, &b},
                      [](const Vector& g, std::span<Vector*> gi) {
                        if (gi[0]) *gi[0] += g;
                        if (gi[1]) *gi[1] -= g;
                      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Vector av = a.data(), bv = b.data();
  return Tape::record(a.shape(), a.data().cwiseProduct(b.data()), {&a, &b},
                      [av = std::move(av), bv = std::move(bv)](
                          const Vector& g, std::span<Vector*> gi) {
                        if (gi[0]) *gi[0] += g.cwiseProduct(bv);
                        if (gi[1]) *gi[1] += g.cwiseProduct(av);
                      });
}

Tensor add(const Tensor& a, double s) {
  return Tape::record(a.shape(), a.data().array() + s, {&a},
                      [](const Vector& g, std::span<Vector*> gi) { *gi[0] += g; });
}

Tensor mul(const Tensor& a, double s) {
  return Tape::record(a.shape(), a.data() * s, {&a},
                      [s](const Vector& g, std::span<Vector*> gi) {
                        *gi[0] += g * s;
                      });
}

Tensor neg(const Tensor& a) { return mul(a, -1.0); }

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  if ((a.data().array() <= 0.0).any()) {
    throw std::domain_error("log: non-positive input");
  }
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sum(const Tensor& a) {
  Vector out(1);
  out[0] = a.data().sum();
  return Tape::record({}, std::move(out), {&a},
                      [](const Vector& g, std::span<Vector*> gi) {
                        gi[0]->array() += g[0];
                      });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean of empty tensor");
  return mul(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (element_count(shape) != a.size()) throw ShapeError("reshape", a.shape(), shape);
  return Tape::record(std::move(shape), a.data(), {&a},
                      [](const Vector& g, std::span<Vector*> gi) { *gi[0] += g; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul", a.shape(), b.shape());
  }
  const int m = a.dim(0), n = b.dim(1);
  Vector out(static_cast<Eigen::Index>(m) * n);
  MatrixMap(out.data(), m, n).noalias() = a.matrix() * b.matrix();
  if (!a.tracked() && !b.tracked()) return Tensor({m, n}, std::move(out));
  // Each side's gradient needs only the other operand.
  Vector av = b.tracked() ? a.data() : Vector(), bv = a.tracked() ? b.data() : Vector();
  const int k = a.dim(1);
  return Tape::record(
      {m, n}, std::move(out), {&a, &b},
      [av = std::move(av), bv = std::move(bv), m, k, n](
          const Vector& g, std::span<Vector*> gi) {
        ConstMatrixMap gm(g.data(), m, n);
        if (gi[0]) {
          MatrixMap(gi[0]->data(), m, k).noalias() +=
              gm * ConstMatrixMap(bv.data(), k, n).transpose();
        }
        if (gi[1]) {
          MatrixMap(gi[1]->data(), k, n).noalias() +=
              ConstMatrixMap(av.data(), m, k).transpose() * gm;
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  const bool vector_input = x.rank() == 1;
  if ((x.rank() != 1 && x.rank() != 2) || w.rank() != 2 || b.rank() != 1 ||
      x.shape().back() != w.dim(0) || b.dim(0) != w.dim(1)) {
    throw ShapeError("linear: x " + to_string(x.shape()) + ", w " +
                     to_string(w.shape()) + ", b " + to_string(b.shape()));
  }
  const int m = vector_input ? 1 : x.dim(0);
  const int k = w.dim(0), n = w.dim(1);
  Vector out(static_cast<Eigen::Index>(m) * n);
  MatrixMap om(out.data(), m, n);
  om.noalias() = x.matrix() * w.matrix();
  om.rowwise() += b.data().transpose();
  Shape shape = vector_input ? Shape{n} : Shape{m, n};
  if (!x.tracked() && !w.tracked() && !b.tracked()) return Tensor(std::move(shape), std::move(out));
  Vector xv = w.tracked() ? x.data() : Vector(), wv = x.tracked() ? w.data() : Vector();
  return Tape::record(
      std::move(shape), std::move(out), {&x, &w, &b},
      [xv = std::move(xv), wv = std::move(wv), m, k, n](
          const Vector& g, std::span<Vector*> gi) {
        ConstMatrixMap gm(g.data(), m, n);
        if (gi[0]) {
          MatrixMap(gi[0]->data(), m, k).noalias() +=
              gm * ConstMatrixMap(wv.data(), k, n).transpose();
        }
        if (gi[1]) {
          MatrixMap(gi[1]->data(), k, n).noalias() +=
              ConstMatrixMap(xv.data(), m, k).transpose() * gm;
        }
        if (gi[2]) *gi[2] += gm.colwise().sum().transpose();
      });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const int rows = parts.front().rank() == 2 ? parts.front().dim(0) : -1;
  int cols = 0;
  std::vector<int> widths;
  std::vector<const Tensor*> inputs;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(0) != rows) {
      throw ShapeError("concat_cols", parts.front().shape(), p.shape());
    }
    widths.push_back(p.dim(1));
    cols += p.dim(1);
    inputs.push_back(&p);
  }
  Vector out(static_cast<Eigen::Index>(rows) * cols);
  MatrixMap om(out.data(), rows, cols);
  int offset = 0;
  for (const auto& p : parts) {
    om.middleCols(offset, p.dim(1)) = p.matrix();
    offset += p.dim(1);
  }
  return Tape::record({rows, cols}, std::move(out), inputs,
                      [rows, cols, widths](const Vector& g, std::span<Vector*> gi) {
                        ConstMatrixMap gm(g.data(), rows, cols);
                        int off = 0;
                        for (std::size_t i = 0; i < widths.size(); ++i) {
                          if (gi[i]) {
                            MatrixMap(gi[i]->data(), rows, widths[i]) +=
                                gm.middleCols(off, widths[i]);
                          }
                          off += widths[i];
                        }
                      });
}

Tensor slice_cols(const Tensor& a, int begin, int count) {
  if (a.rank() != 2 || begin < 0 || count < 0 || begin + count > a.dim(1)) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", +" +
                     std::to_string(count) + ") of " + to_string(a.shape()));
  }
  const int rows = a.dim(0), cols = a.dim(1);
  Vector out(static_cast<Eigen::Index>(rows) * count);
  MatrixMap(out.data(), rows, count) = a.matrix().middleCols(begin, count);
  return Tape::record({rows, count}, std::move(out), {&a},
                      [rows, cols, begin, count](const Vector& g,
                                                 std::span<Vector*> gi) {
                        MatrixMap(gi[0]->data(), rows, cols).middleCols(begin, count) +=
                            ConstMatrixMap(g.data(), rows, count);
                      });
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.rank() != 3 || kernels.rank() != 4 || bias.rank() != 1 ||
      kernels.dim(1) != input.dim(0) || bias.dim(0) != kernels.dim(0)) {
    throw ShapeError("conv2d: input " + to_string(input.shape()) + ", kernels " +
                     to_string(kernels.shape()) + ", bias " +
                     to_string(bias.shape()));
  }
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int f = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  if (h < kh || w < kw) throw ShapeError("conv2d", input.shape(), kernels.shape());
  const int oh = h - kh + 1, ow = w - kw + 1;
  const int patch = c * kh * kw, positions = oh * ow;

  // im2col: one column per output position.
  RowMatrix cols(patch, positions);
  const double* in = input.data().data();
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        double* row = cols.row((ch * kh + i) * kw + j).data();
        for (int y = 0; y < oh; ++y) {
          const double* src = in + (static_cast<std::ptrdiff_t>(ch) * h + y + i) * w + j;
          for (int x = 0; x < ow; ++x) row[y * ow + x] = src[x];
        }
      }
    }
  }
  ConstMatrixMap kmat(kernels.data().data(), f, patch);
  Vector out(static_cast<Eigen::Index>(f) * positions);
  MatrixMap om(out.data(), f, positions);
  om.noalias() = kmat * cols;
  om.colwise() += bias.data();

  Vector kv = kernels.data();
  return Tape::record(
      {f, oh, ow}, std::move(out), {&input, &kernels, &bias},
      [cols = std::move(cols), kv = std::move(kv), c, h, w, f, kh, kw, oh, ow,
       patch, positions](const Vector& g, std::span<Vector*> gi) {
        ConstMatrixMap gm(g.data(), f, positions);
        if (gi[1]) {
          MatrixMap(gi[1]->data(), f, patch).noalias() += gm * cols.transpose();
        }
        if (gi[2]) *gi[2] += gm.rowwise().sum();
        if (gi[0]) {
          RowMatrix gcols = ConstMatrixMap(kv.data(), f, patch).transpose() * gm;
          double* gin = gi[0]->data();
          for (int ch = 0; ch < c; ++ch) {
            for (int i = 0; i < kh; ++i) {
              for (int j = 0; j < kw; ++j) {
                const double* row = gcols.row((ch * kh + i) * kw + j).data();
                for (int y = 0; y < oh; ++y) {
                  double* dst =
                      gin + (static_cast<std::ptrdiff_t>(ch) * h + y + i) * w + j;
                  for (int x = 0; x < ow; ++x) dst[x] += row[y * ow + x];
                }
              }
            }
          }
        }
      });
}

Tensor maxpool2(const Tensor& input) {
  if (input.rank() != 3) {
    throw ShapeError("maxpool2 needs [C x H x W], got " + to_string(input.shape()));
  }
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2 needs even spatial dims, got " +
                     to_string(input.shape()));
  }
  const int oh = h / 2, ow = w / 2;
  Vector out(static_cast<Eigen::Index>(c) * oh * ow);
  std::vector<int> argmax(static_cast<std::size_t>(out.size()));
  const double* in = input.data().data();
  int o = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x, ++o) {
        int best = (ch * h + 2 * y) * w + 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = (ch * h + 2 * y + dy) * w + 2 * x + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        argmax[static_cast<std::size_t>(o)] = best;
        out[o] = in[best];
      }
    }
  }
  return Tape::record({c, oh, ow}, std::move(out), {&input},
                      [argmax = std::move(argmax)](const Vector& g,
                                                   std::span<Vector*> gi) {
                        for (Eigen::Index i = 0; i < g.size(); ++i) {
                          (*gi[0])[argmax[static_cast<std::size_t>(i)]] += g[i];
                        }
                      });
}

Tensor softmax(const Tensor& logits) {
  require_finite("softmax", logits);
  const auto [rows, cols] = rows_cols("softmax", logits);
  Vector out(logits.size());
  MatrixMap p(out.data(), rows, cols);
  p = logits.matrix().colwise() - logits.matrix().rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  Vector pv = out;
  return Tape::record(logits.shape(), std::move(out), {&logits},
                      [pv = std::move(pv), rows, cols](const Vector& g,
                                                       std::span<Vector*> gi) {
                        ConstMatrixMap pm(pv.data(), rows, cols);
                        ConstMatrixMap gm(g.data(), rows, cols);
                        const Eigen::VectorXd dot =
                            (gm.array() * pm.array()).rowwise().sum();
                        MatrixMap(gi[0]->data(), rows, cols).array() +=
                            pm.array() * (gm.array().colwise() - dot.array());
                      });
}

Tensor log_softmax(const Tensor& logits) {
  require_finite("log_softmax", logits);
  const auto [rows, cols] = rows_cols("log_softmax", logits);
  Vector out(logits.size());
  MatrixMap lp(out.data(), rows, cols);
  lp = logits.matrix().colwise() - logits.matrix().rowwise().maxCoeff();
  const Eigen::VectorXd lse = lp.array().exp().rowwise().sum().log();
  lp.colwise() -= lse;
  Vector pv = out.array().exp();
  return Tape::record(logits.shape(), std::move(out), {&logits},
                      [pv = std::move(pv), rows, cols](const Vector& g,
                                                       std::span<Vector*> gi) {
                        ConstMatrixMap pm(pv.data(), rows, cols);
                        ConstMatrixMap gm(g.data(), rows, cols);
                        const Eigen::VectorXd total = gm.rowwise().sum();
                        MatrixMap(gi[0]->data(), rows, cols) +=
                            gm - (pm.array().colwise() * total.array()).matrix();
                      });
}

Tensor pick(const Tensor& a, const std::vector<int>& index) {
  const auto [rows, cols] = rows_cols("pick", a);
  if (static_cast<Eigen::Index>(index.size()) != rows) {
    throw ShapeError("pick: " + std::to_string(index.size()) +
                     " indices for shape " + to_string(a.shape()));
  }
  Vector out(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int j = index[static_cast<std::size_t>(r)];
    if (j < 0 || j >= cols) {
      throw std::out_of_range("pick: index " + std::to_string(j) +
                              " outside " + to_string(a.shape()));
    }
    out[r] = a.data()[r * cols + j];
  }
  Shape shape = a.rank() == 1 ? Shape{} : Shape{static_cast<int>(rows)};
  return Tape::record(std::move(shape), std::move(out), {&a},
                      [index, cols](const Vector& g, std::span<Vector*> gi) {
                        for (Eigen::Index r = 0; r < g.size(); ++r) {
                          (*gi[0])[r * cols + index[static_cast<std::size_t>(r)]] += g[r];
                        }
                      });
}

Tensor entropy_from_logits(const Tensor& logits) {
  require_finite("entropy_from_logits", logits);
  const auto [rows, cols] = rows_cols("entropy_from_logits", logits);
  RowMatrix lp = logits.matrix().colwise() - logits.matrix().rowwise().maxCoeff();
  const Eigen::VectorXd lse = lp.array().exp().rowwise().sum().log();
  lp.colwise() -= lse;
  RowMatrix p = lp.array().exp();
  Vector h = -(p.array() * lp.array()).rowwise().sum();
  Shape shape = logits.rank() == 1 ? Shape{} : Shape{static_cast<int>(rows)};
  Vector hv = h;
  return Tape::record(std::move(shape), std::move(h), {&logits},
                      [p = std::move(p), lp = std::move(lp), hv = std::move(hv),
                       rows, cols](const Vector& g, std::span<Vector*> gi) {
                        MatrixMap gm(gi[0]->data(), rows, cols);
                        for (Eigen::Index r = 0; r < rows; ++r) {
                          gm.row(r).array() -= g[r] * p.row(r).array() *
                                               (lp.row(r).array() + hv[r]);
                        }
                      });
}

Tensor sigmoid_cross_entropy(const Tensor& logits, const Tensor& targets) {
  require_same_shape("sigmoid_cross_entropy", logits, targets);
  const Vector& z = logits.data();
  const Vector& t = targets.data();
  Vector out(z.size());
  Vector grad(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out[i] = std::max(z[i], 0.0) - z[i] * t[i] + std::log1p(std::exp(-std::abs(z[i])));
    const double s = z[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-z[i]))
                                 : std::exp(z[i]) / (1.0 + std::exp(z[i]));
    grad[i] = s - t[i];
  }
  return Tape::record(logits.shape(), std::move(out), {&logits},
                      [grad = std::move(grad)](const Vector& g, std::span<Vector*> gi) {
                        *gi[0] += g.cwiseProduct(grad);
                      });
}

}  // namespace varl
