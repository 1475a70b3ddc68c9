#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bq/clip.hpp"
#include "bq/kernels.hpp"

namespace bq {

struct BenchCase {
  std::string impl;  ///< "separable" or "direct"
  Shape shape;
  std::vector<double> seconds;  ///< one wall time per repeat
  double median_seconds = 0;
  std::uint64_t macs = 0;
  double frames_per_second = 0;  ///< input frames per second at the median
};

struct BenchShapeResult {
  Shape shape;
  BenchCase separable;
  BenchCase direct;
  real max_abs_diff = 0;
  bool outputs_match = false;  ///< max_abs_diff <= 1e-5
  std::string faster;          ///< impl with the lower median
};

struct BenchReport {
  real sigma = 1.1;
  std::size_t k = 9;
  std::size_t stride = 3;
  std::size_t repeats = 0;
  std::vector<BenchShapeResult> results;

  bool all_match() const;
};

struct BenchOptions {
  real sigma = 1.1;
  std::size_t k = 9;
  std::size_t stride = 3;
  NormMode norm = NormMode::sum1;
  std::uint64_t seed = 0;
};

/// Times mbpm_forward against bandpass_direct on identical random inputs and
/// reports median wall times. Throws ConfigError when repeats < 3.
BenchReport run_bench(const std::vector<Shape>& shapes, std::size_t repeats, const BenchOptions& options = {});

/// Median of a non-empty sample (mean of the middle pair for even sizes).
double median(std::vector<double> values);

std::string to_json(const BenchReport& report);

}  // namespace bq
