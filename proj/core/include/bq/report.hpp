#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bq/clip.hpp"

namespace bq {

/// MBPM summary written by the CLI. Fields that were not computed are null.
/// `macs` counts one multiply-accumulate as one operation, which is the unit
/// behind the commonly quoted "FLOPs" for this module.
struct MbpmReport {
  std::optional<std::uint64_t> params;
  std::optional<std::uint64_t> macs;
  std::optional<real> max_rel_err;
  std::vector<real> loss_curve;
  std::optional<real> accuracy;
};

std::string to_json(const MbpmReport& report);

}  // namespace bq
