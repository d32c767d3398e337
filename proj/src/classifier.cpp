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

#include "varl/classifier.hpp"

#include "varl/optim.hpp"

#include <algorithm>
#include <cmath>

namespace varl {

void ImageSet::push_back(std::span<const std::uint8_t> image, int label) {
  if (image.size() != static_cast<std::size_t>(side * side)) {
    throw ShapeError("ImageSet: image of " + std::to_string(image.size()) +
                     " bytes, expected " + std::to_string(side * side));
  }
  pixels.insert(pixels.end(), image.begin(), image.end());
  labels.push_back(label);
}

ImageSet ImageSet::subset(std::span<const std::size_t> indices) const {
  ImageSet out;
  out.side = side;
  for (std::size_t i : indices) out.push_back(bytes(i), labels[i]);
  return out;
}

Tensor image_tensor(std::span<const std::uint8_t> bytes, int side) {
  if (bytes.size() != static_cast<std::size_t>(side * side)) {
    throw ShapeError("image of " + std::to_string(bytes.size()) + " bytes is not " +
                     std::to_string(side) + "x" + std::to_string(side));
  }
  Vector v(static_cast<Eigen::Index>(bytes.size()));
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = bytes[i] / 255.0;
  }
  return Tensor({side, side}, std::move(v));
}

int lenet_class_count(const ParamSet& net) { return net["out/b"].dim(0); }

Prediction lenet_predict(const ParamSet& net, std::span<const std::uint8_t> bytes) {
  const int side = lenet_input_size(net);
  const Tensor p = softmax(lenet_forward(net, image_tensor(bytes, side)));
  Prediction out;
  out.probabilities.assign(p.data().begin(), p.data().end());
  // max_element returns the first maximum: ties go to the lowest index.
  out.label = static_cast<int>(
      std::max_element(out.probabilities.begin(), out.probabilities.end()) -
      out.probabilities.begin());
  return out;
}

double lenet_accuracy(const ParamSet& net, const ImageSet& images) {
  if (images.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    hits += lenet_predict(net, images.bytes(i)).label == images.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(images.size());
}

double lenet_mean_loss(const ParamSet& net, const ImageSet& images) {
  if (images.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor lp = log_softmax(lenet_forward(net, image_tensor(images.bytes(i), images.side)));
    total -= lp[images.labels[i]];
  }
  return total / static_cast<double>(images.size());
}

namespace {

struct SetScore {
  double accuracy = 0.0;
  double loss = 0.0;
};

SetScore score_set(const ParamSet& net, const ImageSet& images) {
  SetScore s;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor logits = lenet_forward(net, image_tensor(images.bytes(i), images.side));
    const Tensor lp = log_softmax(logits);
    const auto& v = logits.data();
    s.accuracy += (std::max_element(v.begin(), v.end()) - v.begin()) == images.labels[i];
    s.loss -= lp[images.labels[i]];
  }
  s.accuracy /= static_cast<double>(images.size());
  s.loss /= static_cast<double>(images.size());
  return s;
}

}  // namespace

FitReport fit_lenet(const ImageSet& train, const ImageSet& validation, int class_count,
                    const FitConfig& config, const EpochCallback& on_epoch) {
  if (train.size() == 0) throw std::invalid_argument("fit_lenet: empty training set");
  if (validation.size() == 0) throw std::invalid_argument("fit_lenet: empty validation set");
  for (int label : train.labels) {
    if (label < 0 || label >= class_count) {
      throw std::invalid_argument("fit_lenet: label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(class_count) + ")");
    }
  }
  if (config.batch_size < 1 || config.max_epochs < 1 || config.patience < 1) {
    throw std::invalid_argument("fit_lenet: batch size, epochs and patience must be >= 1");
  }

  Rng rng(config.seed);
  ParamSet params = init_lenet({train.side, config.fc_units, class_count}, rng);
  AdamState adam = make_adam(params, config.learning_rate);

  FitReport report;
  report.initial_loss = lenet_mean_loss(params, train);
  report.params = params;
  report.best_validation_accuracy = -1.0;
  double best_validation_loss = 0.0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Tape tape;
      const ParamSet tracked = params.track(tape);
      Tensor loss = Tensor::scalar(0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const Tensor logits = lenet_forward(tracked, image_tensor(train.bytes(i), train.side));
        loss = loss - pick(log_softmax(logits), {train.labels[i]});
      }
      loss = loss * (1.0 / static_cast<double>(end - start));
      if (!std::isfinite(loss.item())) {
        throw TrainingDivergedError("non-finite classifier loss at epoch " +
                                    std::to_string(epoch) + ", batch starting " +
                                    std::to_string(start));
      }
      tape.backward(loss);
      adam_step(params, tracked.gradients(tape), adam);
      loss_sum += loss.item();
      ++batches;
    }
    const double epoch_loss = loss_sum / static_cast<double>(batches);
    const SetScore score = score_set(params, validation);
    const double acc = score.accuracy;
    report.epoch_loss.push_back(epoch_loss);
    report.validation_accuracy.push_back(acc);
    if (on_epoch) on_epoch(epoch, epoch_loss, acc);
    // Ties in accuracy (common on small validation sets) fall back to loss.
    if (acc > report.best_validation_accuracy ||
        (acc == report.best_validation_accuracy && score.loss < best_validation_loss)) {
      report.best_validation_accuracy = acc;
      best_validation_loss = score.loss;
      report.best_epoch = epoch;
      report.params = params;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return report;
}

}  // namespace varl
