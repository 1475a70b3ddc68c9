#include "bq/mbpm.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "bq/error.hpp"
#include "bq/parallel.hpp"

namespace bq {

MbpmParams MbpmParams::init(std::size_t channels, real sigma, std::size_t k, std::size_t stride, NormMode norm,
                            bool trainable) {
  MbpmParams params{log_kernel(sigma, k, channels, norm), temporal_highpass_kernel(channels, stride), stride,
                    trainable};
  params.validate();
  return params;
}

void MbpmParams::validate() const {
  spatial.validate();
  temporal.validate();
  if (spatial.channels != temporal.channels) throw ConfigError("MBPM spatial/temporal channel counts differ");
  if (temporal.stride != stride) throw ConfigError("MBPM stride does not match its temporal kernel");
  boundary_for_stride(stride);
}

MbpmForward mbpm_forward_cached(const VideoClip& clip, const MbpmParams& params) {
  params.validate();
  if (clip.channels() != params.channels()) {
    throw DimensionError("MBPM has " + std::to_string(params.channels()) + " channels, clip has " +
                         std::to_string(clip.channels()));
  }
  // Fail on a bad frame count before paying for the spatial pass.
  temporal_output_frames(clip.frames(), params.stride, params.boundary());
  VideoClip spatial = channelwise_conv2d(clip, params.spatial);
  VideoClip gamma = channelwise_conv1d_temporal(spatial, params.temporal, params.stride, params.boundary());
  if (!params.trainable) return MbpmForward{std::move(gamma), std::nullopt};
  return MbpmForward{std::move(gamma), MbpmCache{clip, std::move(spatial)}};
}

VideoClip mbpm_forward(const VideoClip& clip, const MbpmParams& params) {
  MbpmParams frozen = params;
  frozen.trainable = false;
  return mbpm_forward_cached(clip, frozen).output;
}

MbpmGradients mbpm_backward(const VideoClip& grad_output, const std::optional<MbpmCache>& cache,
                            const MbpmParams& params, bool want_input_grad) {
  if (!cache) throw StateError("mbpm_backward needs a cache from a trainable forward pass");
  params.validate();
  const Shape& in = cache->input.shape();
  const std::size_t frames_out = temporal_output_frames(in.t, params.stride, params.boundary());
  if (grad_output.shape() != Shape{frames_out, in.c, in.h, in.w}) {
    throw DimensionError("grad_output " + to_string(grad_output.shape()) + " does not match forward output");
  }

  const std::size_t k = params.spatial.size;
  const long r = static_cast<long>(params.spatial.radius());
  const long h = static_cast<long>(in.h);
  const long w = static_cast<long>(in.w);

  MbpmGradients grads;
  grads.d_spatial.assign(params.spatial.weights.size(), 0.0);
  grads.d_temporal.assign(params.temporal.taps.size(), 0.0);

  // Temporal layer: dTaps and dSpatialOut, one channel per task.
  VideoClip d_spatial_out(in);
  parallel_for(in.c, [&](std::size_t c) {
    const auto taps = params.temporal.channel(c);
    for (std::size_t j = 0; j < frames_out; ++j) {
      const auto g = grad_output.plane(j, c);
      for (std::size_t m = 0; m < TemporalKernel::kTaps; ++m) {
        const std::size_t src_t = temporal_source_frame(j, m, in.t, params.stride, params.boundary());
        const auto s = cache->spatial_out.plane(src_t, c);
        auto ds = d_spatial_out.plane(src_t, c);
        real acc = 0;
        for (std::size_t p = 0; p < g.size(); ++p) {
          acc += g[p] * s[p];
          ds[p] += taps[m] * g[p];
        }
        grads.d_temporal[c * TemporalKernel::kTaps + m] += acc;
      }
    }
  });

  // Spatial layer: dW(i, j) = sum dS(y, x) * I(y + i - r, x + j - r).
  parallel_for(in.c, [&](std::size_t c) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const long dy = static_cast<long>(i) - r;
        const long dx = static_cast<long>(j) - r;
        const long y0 = std::max(0L, -dy);
        const long y1 = std::min(h, h - dy);
        const long x0 = std::max(0L, -dx);
        const long x1 = std::min(w, w - dx);
        real acc = 0;
        for (std::size_t t = 0; t < in.t; ++t) {
          const auto ds = d_spatial_out.plane(t, c);
          const auto src = cache->input.plane(t, c);
          for (long y = y0; y < y1; ++y) {
            for (long x = x0; x < x1; ++x) acc += ds[y * w + x] * src[(y + dy) * w + (x + dx)];
          }
        }
        grads.d_spatial[(c * k + i) * k + j] = acc;
      }
    }
  });

  if (want_input_grad) {
    // dI(y', x') = sum_ij dS(y' - i + r, x' - j + r) * W(i, j).
    VideoClip d_input(in);
    parallel_for(in.t * in.c, [&](std::size_t plane) {
      const std::size_t t = plane / in.c;
      const std::size_t c = plane % in.c;
      const auto ds = d_spatial_out.plane(t, c);
      const auto wts = params.spatial.channel(c);
      auto di = d_input.plane(t, c);
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const real wv = wts[i * k + j];
          const long dy = static_cast<long>(i) - r;
          const long dx = static_cast<long>(j) - r;
          const long y0 = std::max(0L, -dy);
          const long y1 = std::min(h, h - dy);
          const long x0 = std::max(0L, -dx);
          const long x1 = std::min(w, w - dx);
          for (long y = y0; y < y1; ++y) {
            for (long x = x0; x < x1; ++x) di[(y + dy) * w + (x + dx)] += wv * ds[y * w + x];
          }
        }
      }
    });
    grads.d_input = std::move(d_input);
  }
  return grads;
}

VideoClip bandpass_direct(const VideoClip& clip, real sigma, std::size_t k, std::size_t stride, NormMode norm) {
  if (!(sigma > 0)) throw ConfigError("sigma must be > 0");
  if (k < 3 || k % 2 == 0) throw ConfigError("kernel size must be odd and >= 3");
  if (stride != 1 && stride != 3) throw ConfigError("stride must be 1 or 3");
  const Shape& s = clip.shape();
  if (stride == 3 && s.t % 3 != 0) throw DimensionError("stride 3 needs a multiple of 3 frames");

  // LoG sampled straight from its closed form.
  const long r = static_cast<long>(k / 2);
  std::vector<std::vector<double>> lg(k, std::vector<double>(k));
  double sum = 0;
  double abs_sum = 0;
  for (long y = -r; y <= r; ++y) {
    for (long x = -r; x <= r; ++x) {
      const double rr = static_cast<double>(x * x + y * y);
      const double v = -std::exp(-rr / (2 * sigma * sigma)) / (std::numbers::pi * std::pow(sigma, 4)) *
                       (1 - rr / (2 * sigma * sigma));
      lg[y + r][x + r] = v;
      sum += v;
      abs_sum += std::abs(v);
    }
  }
  const double divisor = norm == NormMode::sum1 ? sum : (norm == NormMode::l1 ? abs_sum : 1.0);
  if (std::abs(divisor) < 1e-8) throw NormalizationError("LoG divisor too small");
  for (auto& row : lg) {
    for (double& v : row) v /= divisor;
  }

  // Naive per-frame LoG correlation with zero padding.
  const long H = static_cast<long>(s.h);
  const long W = static_cast<long>(s.w);
  std::vector<double> filtered(s.numel(), 0.0);
  for (std::size_t t = 0; t < s.t; ++t) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (long y = 0; y < H; ++y) {
        for (long x = 0; x < W; ++x) {
          double acc = 0;
          for (long i = -r; i <= r; ++i) {
            for (long j = -r; j <= r; ++j) {
              const long yy = y + i;
              const long xx = x + j;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              acc += lg[i + r][j + r] * clip.at(t, c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
          }
          filtered[((t * s.c + c) * s.h + y) * s.w + x] = acc;
        }
      }
    }
  }

  // Second temporal difference around each output frame's centre.
  const std::size_t frames_out = stride == 3 ? s.t / 3 : s.t;
  std::vector<real> out(frames_out * s.c * s.h * s.w);
  const long T = static_cast<long>(s.t);
  for (std::size_t j = 0; j < frames_out; ++j) {
    const long centre = stride == 3 ? static_cast<long>(3 * j + 1) : static_cast<long>(j);
    const long prev = std::max(centre - 1, 0L);
    const long next = std::min(centre + 1, T - 1);
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t p = 0; p < s.h * s.w; ++p) {
        const auto at = [&](long t) { return filtered[(static_cast<std::size_t>(t) * s.c + c) * s.h * s.w + p]; };
        out[(j * s.c + c) * s.h * s.w + p] = (2.0 / 3.0) * at(centre) - (1.0 / 3.0) * at(prev) - (1.0 / 3.0) * at(next);
      }
    }
  }
  return VideoClip(Shape{frames_out, s.c, s.h, s.w}, std::move(out));
}

std::size_t count_params(const MbpmParams& params) {
  const std::size_t c = params.channels();
  const std::size_t k = params.spatial.size;
  return c * k * k + c * TemporalKernel::kTaps;
}

std::uint64_t count_macs(const MbpmParams& params, const Shape& input) {
  const std::uint64_t k = params.spatial.size;
  const std::uint64_t plane = static_cast<std::uint64_t>(input.c) * input.h * input.w;
  const std::uint64_t frames_out = params.stride == 3 ? input.t / 3 : input.t;
  return input.t * plane * k * k + frames_out * plane * TemporalKernel::kTaps;
}

namespace {

real sum_of_squares(const VideoClip& x) {
  real acc = 0;
  for (real v : x.data()) acc += v * v;
  return acc;
}

// Max relative error over paired analytic/numeric samples, with the floor
// scaled to the largest magnitude in the set.
real max_relative_error(const std::vector<real>& analytic, const std::vector<real>& numeric) {
  real scale = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  const real floor = std::max(scale * 1e-8, std::numeric_limits<real>::min());
  real worst = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const real denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace

GradCheckReport finite_diff_check(const VideoClip& clip, const MbpmParams& params, const GradCheckOptions& options) {
  MbpmParams p = params;
  p.trainable = true;
  const real eps = options.epsilon;

  const auto fwd = mbpm_forward_cached(clip, p);
  VideoClip grad_out = fwd.output;
  for (real& v : grad_out.data()) v *= 2;
  const auto grads = mbpm_backward(grad_out, fwd.cache, p, true);

  const auto loss_of = [&](const VideoClip& x, const MbpmParams& q) { return sum_of_squares(mbpm_forward(x, q)); };
  const auto central = [&](auto&& perturb) {
    perturb(+eps);
    const real up = loss_of(clip, p);
    perturb(-2 * eps);
    const real down = loss_of(clip, p);
    perturb(+eps);
    return (up - down) / (2 * eps);
  };

  GradCheckReport report;
  std::vector<real> analytic;
  std::vector<real> numeric;

  for (std::size_t i = 0; i < p.spatial.weights.size(); ++i) {
    const real saved = p.spatial.weights[i];
    const real n = central([&](real d) { p.spatial.weights[i] += d; });
    p.spatial.weights[i] = saved;
    analytic.push_back(grads.d_spatial[i]);
    numeric.push_back(n);
  }
  report.max_rel_err_spatial = max_relative_error(analytic, numeric);
  report.checked += analytic.size();
  auto all_analytic = analytic;
  auto all_numeric = numeric;

  analytic.clear();
  numeric.clear();
  for (std::size_t i = 0; i < p.temporal.taps.size(); ++i) {
    const real saved = p.temporal.taps[i];
    const real n = central([&](real d) { p.temporal.taps[i] += d; });
    p.temporal.taps[i] = saved;
    analytic.push_back(grads.d_temporal[i]);
    numeric.push_back(n);
  }
  report.max_rel_err_temporal = max_relative_error(analytic, numeric);
  report.checked += analytic.size();
  all_analytic.insert(all_analytic.end(), analytic.begin(), analytic.end());
  all_numeric.insert(all_numeric.end(), numeric.begin(), numeric.end());

  std::vector<std::size_t> indices(clip.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (options.input_samples != 0 && options.input_samples < indices.size()) {
    std::vector<std::size_t> picked;
    std::mt19937_64 rng(options.seed);
    std::sample(indices.begin(), indices.end(), std::back_inserter(picked), options.input_samples, rng);
    indices = std::move(picked);
  }
  analytic.clear();
  numeric.clear();
  VideoClip x = clip;
  for (std::size_t idx : indices) {
    const real saved = x.data()[idx];
    x.data()[idx] = saved + eps;
    const real up = loss_of(x, p);
    x.data()[idx] = saved - eps;
    const real down = loss_of(x, p);
    x.data()[idx] = saved;
    analytic.push_back(grads.d_input->data()[idx]);
    numeric.push_back((up - down) / (2 * eps));
  }
  report.max_rel_err_input = max_relative_error(analytic, numeric);
  report.checked += analytic.size();
  all_analytic.insert(all_analytic.end(), analytic.begin(), analytic.end());
  all_numeric.insert(all_numeric.end(), numeric.begin(), numeric.end());

  report.max_rel_err = std::max({report.max_rel_err_spatial, report.max_rel_err_temporal, report.max_rel_err_input});
  for (std::size_t i = 0; i < all_analytic.size(); ++i) {
    report.max_abs_analytic = std::max(report.max_abs_analytic, std::abs(all_analytic[i]));
    report.max_abs_numeric = std::max(report.max_abs_numeric, std::abs(all_numeric[i]));
  }
  return report;
}

void apply_gradients(MbpmParams& params, const MbpmGradients& grads, real lr) {
  if (grads.d_spatial.size() != params.spatial.weights.size() ||
      grads.d_temporal.size() != params.temporal.taps.size()) {
    throw DimensionError("gradient shapes do not match MBPM params");
  }
  for (std::size_t i = 0; i < grads.d_spatial.size(); ++i) params.spatial.weights[i] -= lr * grads.d_spatial[i];
  for (std::size_t i = 0; i < grads.d_temporal.size(); ++i) params.temporal.taps[i] -= lr * grads.d_temporal[i];
}

}  // namespace bq
