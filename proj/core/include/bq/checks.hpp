#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bq {

/// Outcome of one self-check suite.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

/// Separable MBPM vs the direct loop filter on `clips` random clips of up to
/// 12x3x64x64, for the default and two other (sigma, k) settings.
CheckResult check_equivalence(std::size_t clips = 20, std::uint64_t seed = 0);

/// Temporally constant clips give a zero band-pass response for every
/// (sigma, k) in {0.9, 1.1} x {3, 7, 9}.
CheckResult check_static_annihilation(std::uint64_t seed = 0);

/// 9 frames -> 3 and 24 frames -> 8 at stride 3.
CheckResult check_temporal_reduction();

/// Avg3(clip) == quiet_raw + busy on random clips.
CheckResult check_complementarity(std::size_t clips = 10, std::uint64_t seed = 0);

/// Finite differences against the analytic MBPM backward over `seeds` seeds.
CheckResult check_gradients(std::size_t seeds = 20, std::uint64_t seed = 0);

/// With zero-initialized lateral scales the BQN forward equals the
/// lateral-free two-pathway forward.
CheckResult check_init_identity(std::size_t seeds = 10, std::uint64_t seed = 0);

/// BPLC fuses into busy exactly at even and into quiet exactly at odd blocks.
CheckResult check_alternation();

/// Share of busy energy within +-2 px of a moving edge.
CheckResult check_edge_energy();

/// Parameter and MAC counts for the default module on 24x3x224x224.
CheckResult check_counts();

/// The suites run by `bq check`.
std::vector<CheckResult> run_checks(std::uint64_t seed = 0);

}  // namespace bq
