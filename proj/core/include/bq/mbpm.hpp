#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "bq/clip.hpp"
#include "bq/conv.hpp"
#include "bq/kernels.hpp"

namespace bq {

/// Motion band-pass module state: a channel-wise LoG layer followed by a
/// channel-wise 3-tap temporal layer at stride 1 or 3.
///
/// Stride 3 turns every three input frames into one output frame (pathway
/// input). Stride 1 keeps the frame count and is what lateral connections use.
struct MbpmParams {
  SpatialKernel spatial;
  TemporalKernel temporal;
  std::size_t stride = 3;
  bool trainable = false;

  static MbpmParams init(std::size_t channels, real sigma, std::size_t k, std::size_t stride,
                         NormMode norm = NormMode::sum1, bool trainable = false);

  std::size_t channels() const noexcept { return spatial.channels; }
  TemporalBoundary boundary() const { return boundary_for_stride(stride); }

  /// Throws ConfigError on mismatched channel counts or unsupported stride.
  void validate() const;
};

/// Intermediates kept by a trainable forward pass.
struct MbpmCache {
  VideoClip input;
  VideoClip spatial_out;
};

struct MbpmGradients {
  std::vector<real> d_spatial;   ///< same layout as SpatialKernel::weights
  std::vector<real> d_temporal;  ///< same layout as TemporalKernel::taps
  std::optional<VideoClip> d_input;
};

struct MbpmForward {
  VideoClip output;
  std::optional<MbpmCache> cache;  ///< set only when params.trainable
};

/// Gamma = temporal(spatial(clip)).
VideoClip mbpm_forward(const VideoClip& clip, const MbpmParams& params);

/// Same output as mbpm_forward; additionally returns the cache when the
/// params are trainable.
MbpmForward mbpm_forward_cached(const VideoClip& clip, const MbpmParams& params);

/// Chain rule through both channel-wise layers. Throws StateError when the
/// cache is missing. The input gradient is skipped unless requested.
MbpmGradients mbpm_backward(const VideoClip& grad_output, const std::optional<MbpmCache>& cache,
                            const MbpmParams& params, bool want_input_grad = true);

/// Reference 3D band-pass filter evaluated with plain loops: naive LoG
/// correlation per frame followed by (2/3) F_t - (1/3) F_{t-1} - (1/3) F_{t+1}
/// at the stride-implied positions. Shares no code with mbpm_forward.
VideoClip bandpass_direct(const VideoClip& clip, real sigma, std::size_t k, std::size_t stride,
                          NormMode norm = NormMode::sum1);

std::size_t count_params(const MbpmParams& params);

/// Multiply-accumulates of one forward pass over `input`:
/// t*c*h*w*k^2 (spatial, same padding) + t'*c*h*w*3 (temporal).
std::uint64_t count_macs(const MbpmParams& params, const Shape& input);

struct GradCheckOptions {
  real epsilon = 1e-3;
  /// Input elements to perturb; 0 checks every element.
  std::size_t input_samples = 96;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  real max_rel_err = 0;
  real max_rel_err_spatial = 0;
  real max_rel_err_temporal = 0;
  real max_rel_err_input = 0;
  std::size_t checked = 0;
  real max_abs_analytic = 0;
  real max_abs_numeric = 0;
};

/// Compares mbpm_backward against central differences of
/// loss = sum(Gamma^2), perturbing every spatial and temporal tap and a
/// sample of input elements. Relative error is |a - n| / max(|a|, |n|, f)
/// where f = 1e-8 * largest gradient magnitude seen for that tensor.
GradCheckReport finite_diff_check(const VideoClip& clip, const MbpmParams& params, const GradCheckOptions& options = {});

/// One plain gradient step on the trainable taps.
void apply_gradients(MbpmParams& params, const MbpmGradients& grads, real lr);

}  // namespace bq
