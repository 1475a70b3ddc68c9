#include "bq/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "bq/error.hpp"

namespace bq {

namespace {

constexpr real kMinDivisor = 1e-8;

using nlohmann::json;

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// Min-max to 0..255 over one span; constant spans map to 128.
void heat_span(std::span<const real> values, std::span<unsigned char> out) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const real lo = *lo_it;
  const real hi = *hi_it;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (hi - lo <= 0) {
      out[i] = 128;
    } else {
      out[i] = static_cast<unsigned char>(std::lround((values[i] - lo) / (hi - lo) * 255.0));
    }
  }
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<unsigned char>& pixels) {
  auto out = open_for_write(path, std::ios::binary);
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string_view to_string(NormMode mode) {
  switch (mode) {
    case NormMode::sum1:
      return "sum1";
    case NormMode::l1:
      return "l1";
    case NormMode::none:
      return "none";
  }
  return "?";
}

NormMode parse_norm_mode(std::string_view text) {
  if (text == "sum1") return NormMode::sum1;
  if (text == "l1") return NormMode::l1;
  if (text == "none") return NormMode::none;
  throw ConfigError("unknown norm mode '" + std::string(text) + "' (expected sum1, l1 or none)");
}

void SpatialKernel::validate() const {
  if (size == 0 || size % 2 == 0) throw ConfigError("spatial kernel size must be odd, got " + std::to_string(size));
  if (channels == 0) throw ConfigError("spatial kernel needs at least one channel");
  if (weights.size() != channels * size * size) throw ConfigError("spatial kernel weight count mismatch");
}

void TemporalKernel::validate() const {
  if (stride != 1 && stride != 3) throw ConfigError("temporal stride must be 1 or 3, got " + std::to_string(stride));
  if (channels == 0) throw ConfigError("temporal kernel needs at least one channel");
  if (taps.size() != channels * kTaps) throw ConfigError("temporal kernel tap count mismatch");
}

real log_value(real sigma, real x, real y) {
  const real s2 = sigma * sigma;
  const real q = (x * x + y * y) / (2 * s2);
  return -std::exp(-q) / (std::numbers::pi * s2 * s2) * (1 - q);
}

SpatialKernel log_kernel(real sigma, std::size_t k, std::size_t channels, NormMode norm) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw ConfigError("sigma must be > 0");
  if (k < 3 || k % 2 == 0) throw ConfigError("LoG kernel size must be odd and >= 3, got " + std::to_string(k));
  if (channels == 0) throw ConfigError("LoG kernel needs at least one channel");

  const long r = static_cast<long>(k / 2);
  std::vector<real> base;
  base.reserve(k * k);
  for (long y = -r; y <= r; ++y) {
    for (long x = -r; x <= r; ++x) base.push_back(log_value(sigma, static_cast<real>(x), static_cast<real>(y)));
  }

  real divisor = 1;
  if (norm == NormMode::sum1) {
    divisor = 0;
    for (real v : base) divisor += v;
  } else if (norm == NormMode::l1) {
    divisor = 0;
    for (real v : base) divisor += std::abs(v);
  }
  if (norm != NormMode::none) {
    if (std::abs(divisor) < kMinDivisor) {
      throw NormalizationError("LoG normalization divisor " + std::to_string(divisor) + " too small for sigma=" +
                               std::to_string(sigma) + ", k=" + std::to_string(k) + " under " +
                               std::string(to_string(norm)));
    }
    for (real& v : base) v /= divisor;
  }

  SpatialKernel bank{channels, k, sigma, norm, {}};
  bank.weights.reserve(channels * k * k);
  for (std::size_t c = 0; c < channels; ++c) bank.weights.insert(bank.weights.end(), base.begin(), base.end());
  return bank;
}

TemporalKernel temporal_highpass_kernel(std::size_t channels, std::size_t stride) {
  TemporalKernel bank{channels, stride, {}};
  bank.taps.reserve(channels * TemporalKernel::kTaps);
  for (std::size_t c = 0; c < channels; ++c) {
    bank.taps.push_back(-1.0 / 3.0);
    bank.taps.push_back(2.0 / 3.0);
    bank.taps.push_back(-1.0 / 3.0);
  }
  bank.validate();
  return bank;
}

KernelFormat parse_kernel_format(std::string_view text) {
  if (text == "json") return KernelFormat::json;
  if (text == "pgm") return KernelFormat::pgm;
  throw ConfigError("unknown kernel format '" + std::string(text) + "' (expected json or pgm)");
}

std::vector<unsigned char> kernel_heatmap(const SpatialKernel& kernel) {
  kernel.validate();
  std::vector<unsigned char> out(kernel.weights.size());
  for (std::size_t c = 0; c < kernel.channels; ++c) {
    heat_span(kernel.channel(c),
              std::span<unsigned char>(out).subspan(c * kernel.taps_per_channel(), kernel.taps_per_channel()));
  }
  return out;
}

void export_kernel(const SpatialKernel& kernel, const std::filesystem::path& path, KernelFormat format) {
  kernel.validate();
  if (format == KernelFormat::json) {
    json weights = json::array();
    for (std::size_t c = 0; c < kernel.channels; ++c) {
      json rows = json::array();
      for (std::size_t i = 0; i < kernel.size; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < kernel.size; ++j) row.push_back(kernel.at(c, i, j));
        rows.push_back(std::move(row));
      }
      weights.push_back(std::move(rows));
    }
    const json doc{{"sigma", kernel.sigma},
                   {"k", kernel.size},
                   {"channels", kernel.channels},
                   {"norm_mode", to_string(kernel.norm)},
                   {"weights", std::move(weights)}};
    auto out = open_for_write(path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
    return;
  }

  const auto heat = kernel_heatmap(kernel);
  const std::size_t k = kernel.size;
  const std::size_t width = kernel.channels * k + (kernel.channels - 1);
  std::vector<unsigned char> pixels(width * k, 0);
  for (std::size_t c = 0; c < kernel.channels; ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) pixels[i * width + c * (k + 1) + j] = heat[(c * k + i) * k + j];
    }
  }
  write_pgm(path, width, k, pixels);
}

void export_kernel(const TemporalKernel& kernel, const std::filesystem::path& path, KernelFormat format) {
  kernel.validate();
  if (format == KernelFormat::json) {
    json taps = json::array();
    for (std::size_t c = 0; c < kernel.channels; ++c) {
      const auto ch = kernel.channel(c);
      taps.push_back(json::array({ch[0], ch[1], ch[2]}));
    }
    const json doc{{"stride", kernel.stride}, {"channels", kernel.channels}, {"taps", std::move(taps)}};
    auto out = open_for_write(path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
    return;
  }
  std::vector<unsigned char> pixels(kernel.taps.size());
  for (std::size_t c = 0; c < kernel.channels; ++c) {
    heat_span(kernel.channel(c), std::span<unsigned char>(pixels).subspan(c * TemporalKernel::kTaps,
                                                                          TemporalKernel::kTaps));
  }
  write_pgm(path, TemporalKernel::kTaps, kernel.channels, pixels);
}

SpatialKernel load_spatial_kernel_json(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    SpatialKernel bank;
    bank.sigma = doc.at("sigma").get<real>();
    bank.size = doc.at("k").get<std::size_t>();
    bank.channels = doc.at("channels").get<std::size_t>();
    bank.norm = parse_norm_mode(doc.at("norm_mode").get<std::string>());
    for (const auto& rows : doc.at("weights")) {
      if (rows.size() != bank.size) throw FormatError("kernel row count does not match k");
      for (const auto& row : rows) {
        if (row.size() != bank.size) throw FormatError("kernel column count does not match k");
        for (const auto& v : row) bank.weights.push_back(v.get<real>());
      }
    }
    bank.validate();
    return bank;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

TemporalKernel load_temporal_kernel_json(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    TemporalKernel bank;
    bank.stride = doc.at("stride").get<std::size_t>();
    bank.channels = doc.at("channels").get<std::size_t>();
    for (const auto& ch : doc.at("taps")) {
      if (ch.size() != TemporalKernel::kTaps) throw FormatError("temporal kernel needs 3 taps per channel");
      for (const auto& v : ch) bank.taps.push_back(v.get<real>());
    }
    bank.validate();
    return bank;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace bq
