#ifndef NLPN_DETECTORS_HPP
#define NLPN_DETECTORS_HPP

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlpn/channel.hpp"
#include "nlpn/model.hpp"
#include "nlpn/stats.hpp"

namespace nlpn {

struct Decision {
  int kx = 0;
  std::optional<int> ky;  // absent for single-polarization detection
  bool fallback = false;  // PM-ML: no occupied candidate cell, PM-Det2 decided

  friend bool operator==(const Decision& a, const Decision& b) {
    return a.kx == b.kx && a.ky == b.ky;
  }
};

/// Straight-line M-PSK sector decision. Sector k covers the arc between
/// 2*pi*k/M and 2*pi*(k+1)/M; a point exactly on a boundary goes to the lower
/// of the two adjacent indices (the 0 / 2*pi boundary goes to 0).
int sector_decide(double theta, int order);

Decision detect_uncompensated(const std::complex<double>& e, int order);
Decision detect_uncompensated(const PolSample& e, int order);

/// Rotate by theta_c(|e|) from a 1D map, then decide by sector.
Decision detect_sp_ml(const std::complex<double>& e, const RotationMap& map, int order);

/// Per-polarization detect_sp_ml with own-amplitude maps.
Decision detect_pm_det1(const PolSample& e, const RotationMap& map_x, const RotationMap& map_y,
                        int order);

/// Both rotations are looked up at the joint amplitude (r_x, r_y).
Decision detect_pm_det2(const PolSample& e, const RotationMap& map2d_x,
                        const RotationMap& map2d_y, int order);

/// Argmax of the joint density over all M^2 transmitted phase pairs; ties go
/// to the lexicographically smallest (k_x, k_y). If every candidate cell is
/// empty the PM-Det2 decision is returned with `fallback` set.
Decision detect_pm_ml(const PolSample& e, const JointDensity& density,
                      const RotationMap& map2d_x, const RotationMap& map2d_y, int order);

enum class DetectorKind { sp_ml, pm_det1, pm_det2, pm_ml, uncompensated };

std::string_view to_string(DetectorKind kind) noexcept;
/// Accepts the canonical names (SP-ML, PM-Det1, PM-Det2, PM-ML, Uncompensated),
/// case-insensitively.
DetectorKind parse_detector_kind(std::string_view name);
std::string valid_detector_names();

/// Calibration artifacts for one operating point.
struct Calibration {
  int order = 4;
  double power_w = 0.0;
  double amplitude_scale = 1.0;
  Multiplex multiplex = Multiplex::dual;

  std::optional<ConditionalCF> cf_x, cf_y;          // residual | own amplitude
  std::optional<ConditionalCF> cf2d_x, cf2d_y;      // residual | (r_x, r_y)
  std::optional<RotationMap> map_x, map_y;
  std::optional<RotationMap> map2d_x, map2d_y;
  std::optional<JointDensity> density;
};

/// A decision rule bound to the calibration it needs. Read-only after
/// construction.
class Detector {
 public:
  Detector(DetectorKind kind, std::shared_ptr<const Calibration> calibration);

  DetectorKind kind() const noexcept { return kind_; }
  const Calibration& calibration() const noexcept { return *cal_; }
  Decision operator()(const PolSample& e) const;

 private:
  DetectorKind kind_;
  std::shared_ptr<const Calibration> cal_;
};

}  // namespace nlpn

#endif  // NLPN_DETECTORS_HPP
