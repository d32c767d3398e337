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

#pragma once

#include "varl/tensor.hpp"

#include <vector>

// Differentiable operations. Every function records itself on the tape of its
// tracked inputs and is a plain computation otherwise. Broadcasting is limited
// to the scalar overloads and the row-bias add inside `linear`.

namespace varl {

// Elementwise, equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Scalar variants.
Tensor add(const Tensor& a, double s);
Tensor mul(const Tensor& a, double s);

Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator+(const Tensor& a, double s) { return add(a, s); }
inline Tensor operator-(const Tensor& a, double s) { return add(a, -s); }
inline Tensor operator*(const Tensor& a, double s) { return mul(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return mul(a, s); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

/// Sum of all elements, as a scalar tensor.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Same data, new shape.
Tensor reshape(const Tensor& a, Shape shape);

/// [m x k] . [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// x . w + b with x [m x k] (or [k]), w [k x n], b [n]; the bias is added to
/// every row.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Column concatenation of rank-2 tensors with equal row counts.
Tensor concat_cols(const std::vector<Tensor>& parts);

/// Columns [begin, begin + count) of a rank-2 tensor.
Tensor slice_cols(const Tensor& a, int begin, int count);

/// Valid stride-1 cross-correlation. input [C x H x W], kernels
/// [F x C x kh x kw], bias [F] -> [F x (H-kh+1) x (W-kw+1)].
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);

/// Non-overlapping 2x2 max pooling of [C x H x W]; H and W must be even.
/// Ties route the gradient to the first cell in row-major order.
Tensor maxpool2(const Tensor& input);

/// Softmax over a vector, or over each row of a matrix. Max-subtracted.
Tensor softmax(const Tensor& logits);
Tensor log_softmax(const Tensor& logits);

/// out[i] = a[i, index[i]] for a rank-2 `a`, or a[index[0]] for a vector.
Tensor pick(const Tensor& a, const std::vector<int>& index);

/// Per-row Shannon entropy -sum p log p computed from logits; rank-2 input
/// yields one value per row, rank-1 a scalar.
Tensor entropy_from_logits(const Tensor& logits);

/// Elementwise binary cross-entropy between sigmoid(logits) and targets in
/// [0, 1], in the stable log-sum-exp form. Targets are not differentiated.
Tensor sigmoid_cross_entropy(const Tensor& logits, const Tensor& targets);

}  // namespace varl
