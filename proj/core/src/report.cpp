#include "bq/report.hpp"

#include <nlohmann/json.hpp>

namespace bq {

std::string to_json(const MbpmReport& report) {
  using nlohmann::json;
  json doc;
  doc["params"] = report.params ? json(*report.params) : json(nullptr);
  doc["macs"] = report.macs ? json(*report.macs) : json(nullptr);
  doc["mac_unit"] = "one multiply-accumulate";
  doc["max_rel_err"] = report.max_rel_err ? json(*report.max_rel_err) : json(nullptr);
  doc["loss_curve"] = report.loss_curve;
  doc["accuracy"] = report.accuracy ? json(*report.accuracy) : json(nullptr);
  return doc.dump(2);
}

}  // namespace bq
