#include "bq/bench.hpp"

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

#include "bq/error.hpp"
#include "bq/mbpm.hpp"
#include "bq/synthetic.hpp"

namespace bq {

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty sample");
  std::ranges::sort(values);
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

bool BenchReport::all_match() const {
  return std::ranges::all_of(results, [](const BenchShapeResult& r) { return r.outputs_match; });
}

namespace {

template <typename Fn>
BenchCase time_case(const std::string& impl, const Shape& shape, std::size_t repeats, std::uint64_t macs, Fn&& fn,
                    VideoClip& last_output) {
  BenchCase bc;
  bc.impl = impl;
  bc.shape = shape;
  bc.macs = macs;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    VideoClip out = fn();
    const auto stop = std::chrono::steady_clock::now();
    bc.seconds.push_back(std::chrono::duration<double>(stop - start).count());
    if (r + 1 == repeats) last_output = std::move(out);
  }
  bc.median_seconds = median(bc.seconds);
  bc.frames_per_second = bc.median_seconds > 0 ? static_cast<double>(shape.t) / bc.median_seconds : 0;
  return bc;
}

}  // namespace

BenchReport run_bench(const std::vector<Shape>& shapes, std::size_t repeats, const BenchOptions& options) {
  if (repeats < 3) throw ConfigError("bench needs at least 3 repeats, got " + std::to_string(repeats));
  if (shapes.empty()) throw ConfigError("bench needs at least one shape");

  BenchReport report;
  report.sigma = options.sigma;
  report.k = options.k;
  report.stride = options.stride;
  report.repeats = repeats;

  for (std::size_t n = 0; n < shapes.size(); ++n) {
    const Shape& shape = shapes[n];
    const VideoClip input = synthetic::random_clip(shape, options.seed + n);
    const MbpmParams params = MbpmParams::init(shape.c, options.sigma, options.k, options.stride, options.norm);
    const std::uint64_t macs = count_macs(params, shape);

    VideoClip separable_out(Shape{1, 1, 1, 1});
    VideoClip direct_out(Shape{1, 1, 1, 1});
    BenchShapeResult result;
    result.shape = shape;
    result.separable = time_case(
        "separable", shape, repeats, macs, [&] { return mbpm_forward(input, params); }, separable_out);
    result.direct = time_case(
        "direct", shape, repeats, macs,
        [&] { return bandpass_direct(input, options.sigma, options.k, options.stride, options.norm); }, direct_out);
    result.max_abs_diff = max_abs_diff(separable_out, direct_out);
    result.outputs_match = result.max_abs_diff <= 1e-5;
    result.faster = result.separable.median_seconds <= result.direct.median_seconds ? "separable" : "direct";
    report.results.push_back(std::move(result));
  }
  return report;
}

std::string to_json(const BenchReport& report) {
  using nlohmann::json;
  const auto case_json = [](const BenchCase& bc) {
    return json{{"impl", bc.impl},
                {"median_seconds", bc.median_seconds},
                {"seconds", bc.seconds},
                {"macs", bc.macs},
                {"frames_per_second", bc.frames_per_second}};
  };
  json results = json::array();
  for (const auto& r : report.results) {
    results.push_back({{"shape", {r.shape.t, r.shape.c, r.shape.h, r.shape.w}},
                       {"separable", case_json(r.separable)},
                       {"direct", case_json(r.direct)},
                       {"max_abs_diff", r.max_abs_diff},
                       {"outputs_match", r.outputs_match},
                       {"faster", r.faster}});
  }
  const json doc{{"sigma", report.sigma},     {"k", report.k},
                 {"stride", report.stride},   {"repeats", report.repeats},
                 {"mac_unit", "one multiply-accumulate"},
                 {"all_match", report.all_match()}, {"results", std::move(results)}};
  return doc.dump(2);
}

}  // namespace bq
