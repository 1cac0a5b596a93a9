#include "nlpn/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "nlpn/circular.hpp"
#include "nlpn/error.hpp"

namespace nlpn {

int sector_decide(double theta, int order) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = wrap_phase(theta);
  if (t < 0.0) t += two_pi;
  const double x = t / (two_pi / order);
  if (x <= 0.0) return 0;
  const int k = static_cast<int>(std::ceil(x)) - 1;
  return std::clamp(k, 0, order - 1);
}

Decision detect_uncompensated(const std::complex<double>& e, int order) {
  return {sector_decide(std::arg(e), order), std::nullopt, false};
}

Decision detect_uncompensated(const PolSample& e, int order) {
  return {sector_decide(std::arg(e.x), order), sector_decide(std::arg(e.y), order), false};
}

Decision detect_sp_ml(const std::complex<double>& e, const RotationMap& map, int order) {
  const double rotation = map.angle_for_field(std::abs(e));
  return {sector_decide(std::arg(e) + rotation, order), std::nullopt, false};
}

Decision detect_pm_det1(const PolSample& e, const RotationMap& map_x, const RotationMap& map_y,
                        int order) {
  return {detect_sp_ml(e.x, map_x, order).kx, detect_sp_ml(e.y, map_y, order).kx, false};
}

Decision detect_pm_det2(const PolSample& e, const RotationMap& map2d_x,
                        const RotationMap& map2d_y, int order) {
  const double ax = std::abs(e.x);
  const double ay = std::abs(e.y);
  const double tx = std::arg(e.x) + map2d_x.angle_for_field(ax, ay);
  const double ty = std::arg(e.y) + map2d_y.angle_for_field(ax, ay);
  return {sector_decide(tx, order), sector_decide(ty, order), false};
}

Decision detect_pm_ml(const PolSample& e, const JointDensity& density,
                      const RotationMap& map2d_x, const RotationMap& map2d_y, int order) {
  const double scale = map2d_x.amplitude_scale();
  const auto cell = density.locate(std::abs(e.x) / scale, std::abs(e.y) / scale);
  const double theta_x = std::arg(e.x);
  const double theta_y = std::arg(e.y);
  std::uint32_t best = 0;
  Decision d{0, 0, false};
  for (int a = 0; a < order; ++a) {
    const double sx = theta_x - std::numbers::pi * (2 * a + 1) / order;
    for (int b = 0; b < order; ++b) {
      const double sy = theta_y - std::numbers::pi * (2 * b + 1) / order;
      const std::uint32_t c = density.count_at(cell, sx, sy);
      if (c > best) {
        best = c;
        d = {a, b, false};
      }
    }
  }
  if (best == 0) {
    d = detect_pm_det2(e, map2d_x, map2d_y, order);
    d.fallback = true;
  }
  return d;
}

std::string_view to_string(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::sp_ml: return "SP-ML";
    case DetectorKind::pm_det1: return "PM-Det1";
    case DetectorKind::pm_det2: return "PM-Det2";
    case DetectorKind::pm_ml: return "PM-ML";
    case DetectorKind::uncompensated: return "Uncompensated";
  }
  return "unknown";
}

std::string valid_detector_names() { return "SP-ML, PM-Det1, PM-Det2, PM-ML, Uncompensated"; }

DetectorKind parse_detector_kind(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  const std::string n = lower(name);
  for (auto k : {DetectorKind::sp_ml, DetectorKind::pm_det1, DetectorKind::pm_det2,
                 DetectorKind::pm_ml, DetectorKind::uncompensated})
    if (n == lower(to_string(k))) return k;
  throw Error(Errc::invalid_config,
              "unknown detector '" + std::string(name) + "'; valid kinds: " + valid_detector_names());
}

Detector::Detector(DetectorKind kind, std::shared_ptr<const Calibration> calibration)
    : kind_(kind), cal_(std::move(calibration)) {
  require(cal_ != nullptr, Errc::calibration_required, "detector needs a calibration");
  const auto need = [&](bool ok, const char* what) {
    require(ok, Errc::calibration_required,
            std::string(to_string(kind_)) + " requires calibration artifact: " + what);
  };
  const bool dual = cal_->multiplex == Multiplex::dual;
  switch (kind_) {
    case DetectorKind::sp_ml:
      need(cal_->map_x.has_value(), "1D rotation map (x)");
      break;
    case DetectorKind::pm_det1:
      need(dual, "dual-polarization calibration");
      need(cal_->map_x && cal_->map_y, "1D rotation maps (x, y)");
      break;
    case DetectorKind::pm_det2:
      need(dual, "dual-polarization calibration");
      need(cal_->map2d_x && cal_->map2d_y, "2D rotation maps (x, y)");
      break;
    case DetectorKind::pm_ml:
      need(dual, "dual-polarization calibration");
      need(cal_->map2d_x && cal_->map2d_y, "2D rotation maps (x, y)");
      need(cal_->density.has_value(), "joint density grid");
      break;
    case DetectorKind::uncompensated:
      break;
  }
}

Decision Detector::operator()(const PolSample& e) const {
  const int m = cal_->order;
  switch (kind_) {
    case DetectorKind::sp_ml: return detect_sp_ml(e.x, *cal_->map_x, m);
    case DetectorKind::pm_det1: return detect_pm_det1(e, *cal_->map_x, *cal_->map_y, m);
    case DetectorKind::pm_det2: return detect_pm_det2(e, *cal_->map2d_x, *cal_->map2d_y, m);
    case DetectorKind::pm_ml:
      return detect_pm_ml(e, *cal_->density, *cal_->map2d_x, *cal_->map2d_y, m);
    case DetectorKind::uncompensated:
      return cal_->multiplex == Multiplex::dual ? detect_uncompensated(e, m)
                                                : detect_uncompensated(e.x, m);
  }
  return {};
}

}  // namespace nlpn
