#include "bq/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bq/error.hpp"
#include "bq/synthetic.hpp"

namespace bq {

LabeledClips moving_square_dataset(std::size_t count, const Shape& shape, std::uint64_t seed, std::size_t side,
                                   long speed) {
  if (side + 8 > shape.h || side > shape.w) throw ConfigError("moving squares do not fit the clip");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> row(4, static_cast<long>(shape.h - side) - 4);
  std::uniform_int_distribution<long> jitter(-3, 3);

  LabeledClips data;
  data.classes = 2;
  const long travel = speed * static_cast<long>(shape.t - 1) / 2;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = i % 2;
    const long dir = label == 1 ? 1 : -1;
    synthetic::SquareMotion motion;
    motion.side = side;
    motion.y0 = row(rng);
    motion.x0 = static_cast<long>(shape.w / 2) - static_cast<long>(side / 2) + jitter(rng) - dir * travel;
    motion.dx = dir * speed;
    data.clips.push_back(synthetic::moving_square(shape, motion));
    data.labels.push_back(label);
  }
  return data;
}

LinearHead LinearHead::zeros(std::size_t classes, std::size_t features) {
  return LinearHead{classes, features, std::vector<real>(classes * features, 0.0), std::vector<real>(classes, 0.0)};
}

namespace {

std::size_t cell_begin(std::size_t cell, std::size_t extent, std::size_t grid) { return cell * extent / grid; }

}  // namespace

std::size_t pooled_feature_count(const Shape& s, std::size_t grid) { return s.t * s.c * grid * grid; }

std::vector<real> grid_pool(const VideoClip& gamma, std::size_t grid) {
  const Shape& s = gamma.shape();
  if (grid == 0 || grid > s.h || grid > s.w) throw ConfigError("pooling grid must be in [1, min(h, w)]");
  std::vector<real> features;
  features.reserve(pooled_feature_count(s, grid));
  for (std::size_t t = 0; t < s.t; ++t) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t gy = 0; gy < grid; ++gy) {
        for (std::size_t gx = 0; gx < grid; ++gx) {
          const std::size_t y0 = cell_begin(gy, s.h, grid);
          const std::size_t y1 = cell_begin(gy + 1, s.h, grid);
          const std::size_t x0 = cell_begin(gx, s.w, grid);
          const std::size_t x1 = cell_begin(gx + 1, s.w, grid);
          real acc = 0;
          for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) acc += gamma.at(t, c, y, x);
          }
          features.push_back(acc / static_cast<real>((y1 - y0) * (x1 - x0)));
        }
      }
    }
  }
  return features;
}

VideoClip grid_pool_backward(const std::vector<real>& grad_features, const Shape& s, std::size_t grid) {
  if (grad_features.size() != pooled_feature_count(s, grid)) throw DimensionError("pooled gradient size mismatch");
  VideoClip out(s);
  std::size_t f = 0;
  for (std::size_t t = 0; t < s.t; ++t) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t gy = 0; gy < grid; ++gy) {
        for (std::size_t gx = 0; gx < grid; ++gx, ++f) {
          const std::size_t y0 = cell_begin(gy, s.h, grid);
          const std::size_t y1 = cell_begin(gy + 1, s.h, grid);
          const std::size_t x0 = cell_begin(gx, s.w, grid);
          const std::size_t x1 = cell_begin(gx + 1, s.w, grid);
          const real g = grad_features[f] / static_cast<real>((y1 - y0) * (x1 - x0));
          for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) out.at(t, c, y, x) = g;
          }
        }
      }
    }
  }
  return out;
}

namespace {

struct Logits {
  std::vector<real> probs;
  real loss = 0;
  bool correct = false;
};

Logits softmax_xent(const LinearHead& head, const std::vector<real>& features, std::size_t label) {
  std::vector<real> scores(head.classes);
  for (std::size_t k = 0; k < head.classes; ++k) {
    real acc = head.bias[k];
    for (std::size_t f = 0; f < head.features; ++f) acc += head.weights[k * head.features + f] * features[f];
    scores[k] = acc;
  }
  const real top = *std::ranges::max_element(scores);
  real norm = 0;
  for (real s : scores) norm += std::exp(s - top);
  Logits out;
  out.probs.resize(head.classes);
  for (std::size_t k = 0; k < head.classes; ++k) out.probs[k] = std::exp(scores[k] - top) / norm;
  out.loss = -(scores[label] - top - std::log(norm));
  const auto best = static_cast<std::size_t>(std::ranges::max_element(scores) - scores.begin());
  out.correct = best == label;
  return out;
}

void check_inputs(const LabeledClips& data, const MbpmParams& params, const LinearHead& head, std::size_t grid) {
  if (data.clips.empty() || data.clips.size() != data.labels.size()) throw ConfigError("empty or unlabeled dataset");
  const Shape& s = data.clips.front().shape();
  const std::size_t frames_out = temporal_output_frames(s.t, params.stride, params.boundary());
  const std::size_t features = pooled_feature_count(Shape{frames_out, s.c, s.h, s.w}, grid);
  if (head.features != features || head.classes != data.classes || head.weights.size() != head.classes * features ||
      head.bias.size() != head.classes) {
    throw DimensionError("linear head does not match pooled feature count " + std::to_string(features));
  }
  for (std::size_t label : data.labels) {
    if (label >= data.classes) throw ConfigError("label out of range");
  }
}

}  // namespace

std::pair<real, real> evaluate_toy(const LabeledClips& data, const MbpmParams& params, const LinearHead& head,
                                   std::size_t grid) {
  check_inputs(data, params, head, grid);
  real loss = 0;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.clips.size(); ++n) {
    const auto logits = softmax_xent(head, grid_pool(mbpm_forward(data.clips[n], params), grid), data.labels[n]);
    loss += logits.loss;
    correct += logits.correct ? 1 : 0;
  }
  const auto count = static_cast<real>(data.clips.size());
  return {loss / count, static_cast<real>(correct) / count};
}

TrainReport train_toy(const LabeledClips& data, MbpmParams& params, LinearHead& head, const TrainConfig& config) {
  check_inputs(data, params, head, config.grid);
  const auto count = static_cast<real>(data.clips.size());
  TrainReport report;

  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<real> d_weights(head.weights.size(), 0.0);
    std::vector<real> d_bias(head.bias.size(), 0.0);
    std::vector<real> d_spatial(params.spatial.weights.size(), 0.0);
    std::vector<real> d_temporal(params.temporal.taps.size(), 0.0);
    real loss = 0;

    for (std::size_t n = 0; n < data.clips.size(); ++n) {
      auto fwd = mbpm_forward_cached(data.clips[n], params);
      const auto features = grid_pool(fwd.output, config.grid);
      const auto logits = softmax_xent(head, features, data.labels[n]);
      loss += logits.loss;

      std::vector<real> d_features(head.features, 0.0);
      for (std::size_t k = 0; k < head.classes; ++k) {
        const real d_score = (logits.probs[k] - (k == data.labels[n] ? 1.0 : 0.0)) / count;
        d_bias[k] += d_score;
        for (std::size_t f = 0; f < head.features; ++f) {
          d_weights[k * head.features + f] += d_score * features[f];
          d_features[f] += d_score * head.weights[k * head.features + f];
        }
      }
      if (params.trainable) {
        const auto d_gamma = grid_pool_backward(d_features, fwd.output.shape(), config.grid);
        const auto grads = mbpm_backward(d_gamma, fwd.cache, params, false);
        for (std::size_t i = 0; i < d_spatial.size(); ++i) d_spatial[i] += grads.d_spatial[i];
        for (std::size_t i = 0; i < d_temporal.size(); ++i) d_temporal[i] += grads.d_temporal[i];
      }
    }

    loss /= count;
    if (!std::isfinite(loss)) throw NumericError("training loss is not finite", step);
    report.loss_curve.push_back(loss);

    for (std::size_t i = 0; i < head.weights.size(); ++i) head.weights[i] -= config.lr * d_weights[i];
    for (std::size_t i = 0; i < head.bias.size(); ++i) head.bias[i] -= config.lr * d_bias[i];
    if (params.trainable) {
      apply_gradients(params, MbpmGradients{std::move(d_spatial), std::move(d_temporal), std::nullopt}, config.lr);
    }
  }

  const auto [final_loss, accuracy] = evaluate_toy(data, params, head, config.grid);
  if (!std::isfinite(final_loss)) throw NumericError("training loss is not finite", config.steps);
  report.loss_curve.push_back(final_loss);
  report.smoothed_curve.resize(report.loss_curve.size());
  std::inclusive_scan(report.loss_curve.begin(), report.loss_curve.end(), report.smoothed_curve.begin(),
                      [](real a, real b) { return std::min(a, b); });
  report.initial_loss = report.loss_curve.front();
  report.final_loss = final_loss;
  report.accuracy = accuracy;
  return report;
}

TrainReport run_toy_task(const ToyTask& task) {
  const auto data = moving_square_dataset(task.clips, task.shape, task.seed);
  auto params = MbpmParams::init(task.shape.c, task.sigma, task.k, 3, task.norm, true);
  const Shape gamma_shape{task.shape.t / 3, task.shape.c, task.shape.h, task.shape.w};
  auto head = LinearHead::zeros(data.classes, pooled_feature_count(gamma_shape, task.train.grid));
  return train_toy(data, params, head, task.train);
}

}  // namespace bq
