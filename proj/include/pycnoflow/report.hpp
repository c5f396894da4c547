#ifndef PYCNOFLOW_REPORT_HPP
#define PYCNOFLOW_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

namespace pycnoflow {

struct RegionReport {
  std::string id;
  double population = 0.0;
  double target_area = 0.0;    // original coordinate units
  double achieved_area = 0.0;  // original coordinate units
  double area_error = 0.0;
  std::optional<double> pycno_error;
};

struct RunReport {
  std::vector<RegionReport> regions;
  int iterations = 0;
  bool converged = false;
  std::vector<double> sigma_log;
  std::vector<double> area_error_log;
  std::vector<double> max_residual_log;
  double wall_time_seconds = 0.0;
  std::optional<double> roughness_plateau;
  std::optional<double> roughness_flow;
  std::optional<double> roughness_hybrid;
  std::optional<double> roughness_tobler;

  std::string to_json() const;  // pretty-printed, 2-space indent
};

}  // namespace pycnoflow

#endif
