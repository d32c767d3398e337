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

#include "varl/nn.hpp"

#include <cmath>

namespace varl {

Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(shape));
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

ParamSet init_linear(int in, int out, Rng& rng) {
  ParamSet p;
  p.add("w", glorot_uniform({in, out}, in, out, rng));
  p.add("b", Tensor::zeros({out}));
  return p;
}

Tensor linear(const ParamSet& layer, const Tensor& x) {
  return linear(x, layer["w"], layer["b"]);
}

ParamSet init_lstm(int input_size, int hidden_size, Rng& rng) {
  if (input_size < 1 || hidden_size < 1) {
    throw std::invalid_argument("init_lstm: sizes must be positive");
  }
  ParamSet p;
  p.add("w", glorot_uniform({input_size + hidden_size, 4 * hidden_size},
                            input_size + hidden_size, hidden_size, rng));
  Tensor b = Tensor::zeros({4 * hidden_size});
  for (int j = hidden_size; j < 2 * hidden_size; ++j) b[j] = 1.0;
  p.add("b", std::move(b));
  return p;
}

int lstm_hidden_size(const ParamSet& lstm) { return lstm["b"].dim(0) / 4; }

LstmState lstm_zero_state(int batch, int hidden_size) {
  return {Tensor::zeros({batch, hidden_size}), Tensor::zeros({batch, hidden_size})};
}

LstmState lstm_cell(const Tensor& x, const LstmState& state, const ParamSet& lstm) {
  return lstm_cell(x, state, lstm["w"], lstm["b"]);
}

LstmState lstm_cell(const Tensor& x, const LstmState& state, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || w.dim(1) % 4 != 0) throw ShapeError("lstm_cell: w " + to_string(w.shape()));
  const int hidden = w.dim(1) / 4;
  if (x.rank() != 2 || state.h.rank() != 2 || state.c.shape() != state.h.shape() ||
      state.h.dim(1) != hidden || x.dim(0) != state.h.dim(0) ||
      x.dim(1) + hidden != w.dim(0)) {
    throw ShapeError("lstm_cell: x " + to_string(x.shape()) + ", h " +
                     to_string(state.h.shape()) + ", c " +
                     to_string(state.c.shape()) + ", w " + to_string(w.shape()));
  }
  const Tensor gates = linear(concat_cols({x, state.h}), w, b);
  const Tensor i = sigmoid(slice_cols(gates, 0, hidden));
  const Tensor f = sigmoid(slice_cols(gates, hidden, hidden));
  const Tensor g = tanh(slice_cols(gates, 2 * hidden, hidden));
  const Tensor o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Tensor c = f * state.c + i * g;
  Tensor h = o * tanh(c);
  return {std::move(h), std::move(c)};
}

int lenet_flat_size(int input_size) {
  const int c1 = input_size - 4;
  if (input_size < 5 || c1 % 2 != 0) {
    throw ShapeError("LeNet input side " + std::to_string(input_size) +
                     " does not pool evenly");
  }
  const int c2 = c1 / 2 - 4;
  if (c2 < 2 || c2 % 2 != 0) {
    throw ShapeError("LeNet input side " + std::to_string(input_size) +
                     " does not pool evenly");
  }
  return 16 * (c2 / 2) * (c2 / 2);
}

ParamSet init_lenet(const LeNetConfig& config, Rng& rng) {
  const int flat = lenet_flat_size(config.input_size);
  ParamSet p;
  p.add("conv1/w", glorot_uniform({6, 1, 5, 5}, 25, 6 * 25, rng));
  p.add("conv1/b", Tensor::zeros({6}));
  p.add("conv2/w", glorot_uniform({16, 6, 5, 5}, 6 * 25, 16 * 25, rng));
  p.add("conv2/b", Tensor::zeros({16}));
  p.add("fc/w", glorot_uniform({flat, config.fc_units}, flat, config.fc_units, rng));
  p.add("fc/b", Tensor::zeros({config.fc_units}));
  p.add("out/w", glorot_uniform({config.fc_units, config.class_count},
                                config.fc_units, config.class_count, rng));
  p.add("out/b", Tensor::zeros({config.class_count}));
  return p;
}

int lenet_input_size(const ParamSet& net) {
  const int flat = net["fc/w"].dim(0);
  for (int side = 5; side <= 1024; ++side) {
    try {
      if (lenet_flat_size(side) == flat) return side;
    } catch (const ShapeError&) {
    }
  }
  throw ShapeError("no LeNet input side yields flat size " + std::to_string(flat));
}

Tensor lenet_forward(const ParamSet& net, const Tensor& image) {
  Tensor x = image;
  if (x.rank() == 2) x = reshape(x, {1, x.dim(0), x.dim(1)});
  if (x.rank() != 3 || x.dim(0) != 1) {
    throw ShapeError("lenet_forward expects [s x s] or [1 x s x s], got " +
                     to_string(image.shape()));
  }
  x = maxpool2(relu(conv2d(x, net["conv1/w"], net["conv1/b"])));
  x = maxpool2(relu(conv2d(x, net["conv2/w"], net["conv2/b"])));
  x = reshape(x, {static_cast<int>(x.size())});
  x = relu(linear(x, net["fc/w"], net["fc/b"]));
  return linear(x, net["out/w"], net["out/b"]);
}

ParamSet init_mlp(const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("init_mlp needs >= 2 sizes");
  ParamSet p;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::string prefix = "l" + std::to_string(l) + "/";
    p.add(prefix + "w", glorot_uniform({sizes[l], sizes[l + 1]}, sizes[l],
                                       sizes[l + 1], rng));
    p.add(prefix + "b", Tensor::zeros({sizes[l + 1]}));
  }
  return p;
}

Tensor mlp_forward(const ParamSet& net, const Tensor& x) {
  const std::size_t layers = net.size() / 2;
  Tensor y = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string prefix = "l" + std::to_string(l) + "/";
    y = linear(y, net[prefix + "w"], net[prefix + "b"]);
    if (l + 1 < layers) y = relu(y);
  }
  return y;
}

}  // namespace varl
