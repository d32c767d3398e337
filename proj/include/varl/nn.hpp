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

#include "varl/ops.hpp"
#include "varl/params.hpp"
#include "varl/rng.hpp"

#include <vector>

// Network building blocks over ParamSet. Forward functions accept either the
// stored (untracked) parameters for inference or a `track`ed copy for training.

namespace varl {

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng);

/// Dense layer "w" [in x out], "b" [out] (zero bias).
ParamSet init_linear(int in, int out, Rng& rng);
Tensor linear(const ParamSet& layer, const Tensor& x);

// ---------------------------------------------------------------------------
// LSTM

struct LstmState {
  Tensor h;
  Tensor c;
};

/// "w" [(input + hidden) x 4*hidden], "b" [4*hidden], gate blocks ordered
/// input, forget, candidate, output. Forget-gate bias starts at 1.
ParamSet init_lstm(int input_size, int hidden_size, Rng& rng);

int lstm_hidden_size(const ParamSet& lstm);

/// Zero state for a batch of `batch` rows.
LstmState lstm_zero_state(int batch, int hidden_size);

/// One step over a batch: x [B x input], state [B x hidden].
///   i = sigmoid, f = sigmoid, g = tanh, o = sigmoid of [x h] W + b
///   c' = f * c + i * g,  h' = o * tanh(c')
LstmState lstm_cell(const Tensor& x, const LstmState& state, const ParamSet& lstm);
LstmState lstm_cell(const Tensor& x, const LstmState& state, const Tensor& w, const Tensor& b);

// ---------------------------------------------------------------------------
// LeNet: conv5(6) relu pool conv5(16) relu pool flatten dense relu dense

struct LeNetConfig {
  int input_size = 28;  // square input side
  int fc_units = 128;
  int class_count = 10;
};

/// Flattened feature count after the two conv/pool stages; throws if the
/// input side does not pool evenly.
int lenet_flat_size(int input_size);

ParamSet init_lenet(const LeNetConfig& config, Rng& rng);

/// Logits [class_count] for an image [s x s] or [1 x s x s].
Tensor lenet_forward(const ParamSet& net, const Tensor& image);

int lenet_input_size(const ParamSet& net);

// ---------------------------------------------------------------------------
// MLP with relu hidden layers and a linear output; layers named "l0/", "l1/"...

ParamSet init_mlp(const std::vector<int>& sizes, Rng& rng);
Tensor mlp_forward(const ParamSet& net, const Tensor& x);

}  // namespace varl
