#include "pycnoflow/report.hpp"

#include <json.hpp>

namespace pycnoflow {

std::string RunReport::to_json() const
{
  using ordered_json = nlohmann::ordered_json;
  ordered_json doc;
  doc["converged"] = converged;
  doc["iterations"] = iterations;
  doc["wall_time_seconds"] = wall_time_seconds;
  doc["regions"] = ordered_json::array();
  for (const auto &r : regions) {
    ordered_json region;
    region["id"] = r.id;
    region["population"] = r.population;
    region["target_area"] = r.target_area;
    region["achieved_area"] = r.achieved_area;
    region["area_error"] = r.area_error;
    if (r.pycno_error.has_value()) {
      region["pycno_error"] = *r.pycno_error;
    }
    doc["regions"].push_back(region);
  }
  doc["sigma_log"] = sigma_log;
  doc["area_error_log"] = area_error_log;
  doc["max_residual_log"] = max_residual_log;
  ordered_json rough;
  if (roughness_plateau.has_value()) {
    rough["plateau"] = *roughness_plateau;
  }
  if (roughness_flow.has_value()) {
    rough["flow"] = *roughness_flow;
  }
  if (roughness_hybrid.has_value()) {
    rough["hybrid"] = *roughness_hybrid;
  }
  if (roughness_tobler.has_value()) {
    rough["tobler"] = *roughness_tobler;
  }
  doc["roughness"] = rough;
  return doc.dump(2) + "\n";
}

}  // namespace pycnoflow
