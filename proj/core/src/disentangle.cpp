#include "bq/disentangle.hpp"

#include "bq/error.hpp"

namespace bq {

void DisentangleConfig::validate() const {
  if (!(sigma > 0)) throw ConfigError("sigma must be > 0");
  if (k < 3 || k % 2 == 0) throw ConfigError("k must be odd and >= 3");
  if (quiet_h == 0 || quiet_w == 0) throw ConfigError("quiet size must be >= 1");
  if (busy_resize && (busy_resize->out_h == 0 || busy_resize->out_w == 0)) {
    throw ConfigError("busy size must be >= 1");
  }
}

MbpmParams busy_params(const DisentangleConfig& config, std::size_t channels) {
  config.validate();
  return MbpmParams::init(channels, config.sigma, config.k, 3, config.norm);
}

VideoClip busy_input(const VideoClip& clip, const MbpmParams& params) {
  if (params.stride != 3) throw ConfigError("busy stream needs a stride-3 MBPM");
  return mbpm_forward(clip, params);
}

VideoClip quiet_raw(const VideoClip& clip, const VideoClip& busy) {
  VideoClip avg = temporal_avg_pool(clip, 3, 3);
  if (avg.shape() != busy.shape()) {
    throw DimensionError("Avg3(clip) " + to_string(avg.shape()) + " and busy " + to_string(busy.shape()) +
                         " differ");
  }
  for (std::size_t i = 0; i < avg.size(); ++i) avg.data()[i] -= busy.data()[i];
  return avg;
}

VideoClip quiet_input(const VideoClip& clip, const VideoClip& busy, ResizePolicy quiet_size) {
  return bilinear_resize(quiet_raw(clip, busy), quiet_size);
}

DisentangledPair disentangle(const VideoClip& clip, const DisentangleConfig& config, const MbpmParams& params) {
  config.validate();
  if (clip.frames() % 3 != 0) {
    throw DimensionError("clip length " + std::to_string(clip.frames()) + " is not 3N");
  }
  if (config.segments != 0 && clip.frames() != 3 * config.segments) {
    throw DimensionError("expected " + std::to_string(3 * config.segments) + " frames for " +
                         std::to_string(config.segments) + " segments, got " + std::to_string(clip.frames()));
  }
  const VideoClip input = config.busy_resize ? bilinear_resize(clip, *config.busy_resize) : clip;
  if (config.quiet_h > input.height() || config.quiet_w > input.width()) {
    throw ConfigError("quiet size must not exceed the busy size");
  }
  VideoClip busy = busy_input(input, params);
  VideoClip quiet = quiet_input(input, busy, ResizePolicy{config.quiet_h, config.quiet_w});
  return DisentangledPair{std::move(busy), std::move(quiet)};
}

DisentangledPair disentangle(const VideoClip& clip, const DisentangleConfig& config) {
  return disentangle(clip, config, busy_params(config, clip.channels()));
}

}  // namespace bq
