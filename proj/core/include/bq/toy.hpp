#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bq/clip.hpp"
#include "bq/mbpm.hpp"

namespace bq {

struct LabeledClips {
  std::vector<VideoClip> clips;
  std::vector<std::size_t> labels;
  std::size_t classes = 2;
};

/// Left-vs-right moving squares. Label 1 moves right, label 0 moves left;
/// classes alternate. Each square is centred horizontally at the middle frame
/// (jitter +-3 px) and placed at a random row.
LabeledClips moving_square_dataset(std::size_t count, const Shape& shape, std::uint64_t seed, std::size_t side = 8,
                                   long speed = 2);

/// Linear classifier over grid-pooled Gamma.
struct LinearHead {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<real> weights;  ///< [class][feature]
  std::vector<real> bias;

  static LinearHead zeros(std::size_t classes, std::size_t features);
};

/// Average of Gamma over a grid x grid partition of each frame and channel.
/// Feature order is [frame][channel][cell row][cell col]; grid = 1 is global
/// average pooling per frame and channel.
std::vector<real> grid_pool(const VideoClip& gamma, std::size_t grid);

/// Transpose of grid_pool: spreads feature gradients back over their cells.
VideoClip grid_pool_backward(const std::vector<real>& grad_features, const Shape& gamma_shape, std::size_t grid);

std::size_t pooled_feature_count(const Shape& gamma_shape, std::size_t grid);

struct TrainConfig {
  std::size_t steps = 500;
  real lr = 0.05;
  std::size_t grid = 4;
};

struct TrainReport {
  std::vector<real> loss_curve;      ///< loss before step 0..steps-1, then after the last step
  std::vector<real> smoothed_curve;  ///< running minimum of loss_curve
  real initial_loss = 0;
  real final_loss = 0;
  real accuracy = 0;  ///< training accuracy after the last step
};

/// Full-batch gradient descent on mean cross-entropy through the head and,
/// when params.trainable, the MBPM taps. Throws NumericError on a non-finite
/// loss.
TrainReport train_toy(const LabeledClips& data, MbpmParams& params, LinearHead& head, const TrainConfig& config);

/// Mean cross-entropy and accuracy without updating anything.
std::pair<real, real> evaluate_toy(const LabeledClips& data, const MbpmParams& params, const LinearHead& head,
                                   std::size_t grid);

/// The moving-square task with its default sizes: dataset from `seed`, a
/// trainable LoG-initialized MBPM and a zero head.
struct ToyTask {
  std::size_t clips = 200;
  Shape shape{6, 1, 32, 32};
  real sigma = 1.1;
  std::size_t k = 5;
  NormMode norm = NormMode::sum1;
  std::uint64_t seed = 0;
  TrainConfig train;
};

TrainReport run_toy_task(const ToyTask& task);

}  // namespace bq
