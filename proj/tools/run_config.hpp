#ifndef NLPN_TOOLS_RUN_CONFIG_HPP
#define NLPN_TOOLS_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlpn/ser.hpp"
#include "nlpn/ssfm_sweep.hpp"

namespace nlpn::cli {

struct ScenarioSelection {
  ScenarioKind kind = ScenarioKind::pm;
  std::vector<DetectorKind> detectors;
};

struct SsfmSection {
  LinkConfig link = reference_lumped_link();
  double dispersion_ps_nm_km = 17.0;
  std::vector<double> rates_gbaud{0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> power_grid_dbm;
  std::vector<DetectorKind> detectors{DetectorKind::pm_det1, DetectorKind::pm_det2};
  SsfmSweepOptions options;
};

/// Everything one run needs. The seed is mandatory.
struct RunConfig {
  std::filesystem::path source;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::filesystem::path calibration_dir;  // empty: <output_dir>/calibration
  int threads = 1;

  LinkConfig link = reference_distributed_link();
  std::vector<double> power_grid_dbm;
  std::vector<ScenarioSelection> scenarios;
  SweepOptions sweep;

  std::optional<SsfmSection> ssfm;

  std::filesystem::path calibration_root() const {
    return calibration_dir.empty() ? output_dir / "calibration" : calibration_dir;
  }
};

/// JSON with // and /* */ comments. Unknown keys are errors.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& source = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace nlpn::cli

#endif  // NLPN_TOOLS_RUN_CONFIG_HPP
