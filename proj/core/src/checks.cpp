#include "bq/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>

#include "bq/bqn.hpp"
#include "bq/disentangle.hpp"
#include "bq/mbpm.hpp"
#include "bq/synthetic.hpp"

namespace bq {

namespace {

CheckResult timed(std::string name, const std::function<void(CheckResult&)>& body) {
  CheckResult result;
  result.name = std::move(name);
  const auto start = std::chrono::steady_clock::now();
  body(result);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string printf_string(const char* fmt, ...) {
  char buf[256];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

real max_diff(const std::vector<real>& a, const std::vector<real>& b) {
  if (a.size() != b.size()) return std::numeric_limits<real>::infinity();
  real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

CheckResult check_equivalence(std::size_t clips, std::uint64_t seed) {
  return timed("equivalence", [&](CheckResult& r) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> segments(1, 4);
    std::uniform_int_distribution<std::size_t> side(8, 64);
    const std::pair<real, std::size_t> settings[] = {{1.1, 9}, {0.9, 7}, {0.9, 3}};
    real worst = 0;
    for (std::size_t i = 0; i < clips; ++i) {
      const Shape shape{3 * segments(rng), 3, side(rng), side(rng)};
      const auto clip = synthetic::random_clip(shape, rng());
      const auto [sigma, k] = settings[i % 3];
      const auto params = MbpmParams::init(3, sigma, k, 3);
      worst = std::max(worst, max_abs_diff(mbpm_forward(clip, params), bandpass_direct(clip, sigma, k, 3)));
    }
    r.passed = worst <= 1e-5;
    r.detail = printf_string("%zu clips, max abs diff %.3e (limit 1e-5)", clips, worst);
  });
}

CheckResult check_static_annihilation(std::uint64_t seed) {
  return timed("static-annihilation", [&](CheckResult& r) {
    real worst = 0;
    std::uint64_t s = seed;
    for (real sigma : {0.9, 1.1}) {
      for (std::size_t k : {3u, 7u, 9u}) {
        const auto clip = synthetic::static_clip(Shape{6, 3, 24, 24}, ++s);
        worst = std::max(worst, max_abs(mbpm_forward(clip, MbpmParams::init(3, sigma, k, 3))));
        worst = std::max(worst, max_abs(mbpm_forward(clip, MbpmParams::init(3, sigma, k, 1))));
      }
    }
    r.passed = worst <= 1e-6;
    r.detail = printf_string("max |Gamma| %.3e (limit 1e-6)", worst);
  });
}

CheckResult check_temporal_reduction() {
  return timed("temporal-reduction", [](CheckResult& r) {
    const auto params = MbpmParams::init(3, 1.1, 9, 3);
    const auto nine = mbpm_forward(VideoClip(Shape{9, 3, 8, 8}), params).frames();
    const auto many = mbpm_forward(VideoClip(Shape{24, 3, 8, 8}), params).frames();
    r.passed = nine == 3 && many == 8;
    r.detail = printf_string("9 -> %zu, 24 -> %zu", nine, many);
  });
}

CheckResult check_complementarity(std::size_t clips, std::uint64_t seed) {
  return timed("complementarity", [&](CheckResult& r) {
    real worst = 0;
    const auto params = busy_params(DisentangleConfig{}, 3);
    for (std::size_t i = 0; i < clips; ++i) {
      const auto clip = synthetic::random_clip(Shape{12, 3, 32, 32}, seed + 100 + i);
      const auto busy = busy_input(clip, params);
      const auto quiet = quiet_raw(clip, busy);
      const auto avg = temporal_avg_pool(clip);
      for (std::size_t j = 0; j < avg.size(); ++j) {
        worst = std::max(worst, std::abs(avg.data()[j] - (quiet.data()[j] + busy.data()[j])));
      }
    }
    r.passed = worst <= 1e-6;
    r.detail = printf_string("%zu clips, max abs error %.3e (limit 1e-6)", clips, worst);
  });
}

CheckResult check_gradients(std::size_t seeds, std::uint64_t seed) {
  return timed("gradients", [&](CheckResult& r) {
    real worst = 0;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < seeds; ++i) {
      const std::uint64_t s = seed + i;
      std::mt19937_64 rng(s);
      std::normal_distribution<real> noise(0.0, 0.05);
      const std::size_t stride = i % 2 == 0 ? 3 : 1;
      auto params = MbpmParams::init(3, i % 3 == 0 ? 0.9 : 1.1, i % 4 == 0 ? 5 : 9, stride, NormMode::l1, true);
      if (i > 0) {
        for (real& w : params.spatial.weights) w += noise(rng);
        for (real& w : params.temporal.taps) w += noise(rng);
      }
      const auto clip = synthetic::random_clip(Shape{6, 3, 16, 16}, rng(), -1, 1);
      GradCheckOptions options;
      options.seed = s;
      const auto report = finite_diff_check(clip, params, options);
      worst = std::max(worst, report.max_rel_err);
      checked += report.checked;
    }
    r.passed = worst <= 1e-3;
    r.detail = printf_string("%zu seeds, %zu partials, max rel err %.3e (limit 1e-3)", seeds, checked, worst);
  });
}

CheckResult check_init_identity(std::size_t seeds, std::uint64_t seed) {
  return timed("init-identity", [&](CheckResult& r) {
    real worst = 0;
    for (std::size_t i = 0; i < seeds; ++i) {
      BqnConfig config;
      config.seed = seed + i;
      config.laterals = laterals_at_every_block(config);
      const auto graph = build_bqn(config);
      const DisentangledPair pair{synthetic::random_clip(Shape{2, 3, 32, 32}, seed + 50 + i, -1, 1),
                                  synthetic::random_clip(Shape{2, 3, 24, 24}, seed + 80 + i)};
      const auto with = forward(graph, pair);
      const auto without = fuse_features(graph, run_pathway(graph, Pathway::busy, pair.busy),
                                         run_pathway(graph, Pathway::quiet, pair.quiet));
      worst = std::max(worst, max_diff(with, without));
    }
    r.passed = worst <= 1e-6;
    r.detail = printf_string("%zu seeds, max score diff %.3e (limit 1e-6)", seeds, worst);
  });
}

CheckResult check_alternation() {
  return timed("alternation", [](CheckResult& r) {
    std::size_t sites = 0;
    bool ok = true;
    for (const std::vector<std::size_t>& blocks : {std::vector<std::size_t>{1, 1, 1, 1}, {3, 4, 6, 3}}) {
      BqnConfig config;
      config.blocks_per_stage = blocks;
      config.widths = {2, 2, 2, 2};
      config.laterals = laterals_at_every_block(config);
      const auto plan = fusion_plan(build_bqn(config));
      ok = ok && plan.size() == config.block_count();
      for (const auto& site : plan) {
        ok = ok && site.into_busy == (site.index % 2 == 0) && site.into_quiet == (site.index % 2 == 1);
      }
      sites += plan.size();
    }
    r.passed = ok;
    r.detail = printf_string("%zu lateral sites checked", sites);
  });
}

CheckResult check_edge_energy() {
  return timed("edge-energy", [](CheckResult& r) {
    const real start = 20.3;
    const real speed = 1.0;
    const auto clip = synthetic::moving_edge(Shape{24, 3, 64, 96}, start, speed);
    const auto busy = busy_input(clip, busy_params(DisentangleConfig{}, 3));
    const real fraction = synthetic::edge_energy_fraction(busy, start, speed, 2.0);
    r.passed = fraction >= 0.7;
    r.detail = printf_string("%.1f%% of busy energy within +-2 px (limit 70%%)", 100 * fraction);
  });
}

CheckResult check_counts() {
  return timed("counts", [](CheckResult& r) {
    const auto params = MbpmParams::init(3, 1.1, 9, 3);
    const Shape input{24, 3, 224, 224};
    const std::uint64_t spatial = input.numel() * 81;
    const std::uint64_t temporal = std::uint64_t{8} * 3 * 224 * 224 * 3;
    const auto macs = count_macs(params, input);
    const auto n = count_params(params);
    r.passed = n == 252 && macs == spatial + temporal;
    r.detail = printf_string("%zu params, %llu + %llu = %llu MACs", n, static_cast<unsigned long long>(spatial),
                               static_cast<unsigned long long>(temporal), static_cast<unsigned long long>(macs));
  });
}

std::vector<CheckResult> run_checks(std::uint64_t seed) {
  return {check_equivalence(20, seed), check_static_annihilation(seed), check_complementarity(10, seed),
          check_gradients(20, seed), check_init_identity(10, seed), check_alternation()};
}

}  // namespace bq
