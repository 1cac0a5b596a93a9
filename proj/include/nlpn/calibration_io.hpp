#ifndef NLPN_CALIBRATION_IO_HPP
#define NLPN_CALIBRATION_IO_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nlpn/detectors.hpp"
#include "nlpn/ser.hpp"

namespace nlpn {

/// Identifies the operating point a calibration file belongs to. Stored in
/// every file and checked on load.
struct CalibrationHeader {
  ScenarioKind scenario = ScenarioKind::pm;
  double p_t_dbm = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t draws = 0;
};

/// The artifact files of one (scenario, power) point. Single-polarization
/// points only have map1d_x.
struct CalibrationFiles {
  std::filesystem::path map1d_x, map1d_y, map2d, density;

  /// Files that `save_calibration` writes for `multiplex` (density optional).
  std::vector<std::filesystem::path> expected(Multiplex multiplex, bool with_density) const;
};

/// <dir>/<scenario>/p<P>dBm.<artifact>.bin, P with three decimals.
CalibrationFiles calibration_files(const std::filesystem::path& dir, ScenarioKind scenario,
                                   double p_t_dbm);

/// Versioned little-endian binary: magic, version, artifact kind, header,
/// then grids, the residual CF sums and counts and the rotation angles (maps)
/// or the cell counts (density). Parent directories are created.
void save_calibration(const Calibration& cal, const CalibrationHeader& header,
                      const CalibrationFiles& files);

/// Reads the files back. Throws calibration_required when a needed file is
/// missing, io_error on a corrupt file or one whose scenario or power differs
/// from `expect`.
/// The density is loaded when present.
Calibration load_calibration(const CalibrationFiles& files, Multiplex multiplex,
                             const CalibrationHeader& expect);

}  // namespace nlpn

#endif  // NLPN_CALIBRATION_IO_HPP
