#ifndef NLPN_MODEL_HPP
#define NLPN_MODEL_HPP

#include <cmath>
#include <concepts>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace nlpn {

using cplx = std::complex<double>;

namespace constants {
inline constexpr double planck = 6.62607e-34;          // J s
inline constexpr double speed_of_light = 299792458.0;  // m/s
}  // namespace constants

template <std::floating_point Scalar>
Scalar db_to_linear(Scalar db) {
  return std::pow(Scalar(10), db / Scalar(10));
}

template <std::floating_point Scalar>
Scalar dbm_to_watt(Scalar dbm) {
  return db_to_linear(dbm) * Scalar(1e-3);
}

template <std::floating_point Scalar>
Scalar watt_to_dbm(Scalar watt) {
  return Scalar(10) * std::log10(watt / Scalar(1e-3));
}

inline double db_to_linear(std::integral auto db) { return db_to_linear(static_cast<double>(db)); }
inline double dbm_to_watt(std::integral auto dbm) { return dbm_to_watt(static_cast<double>(dbm)); }

/// Jones vector: complex field amplitudes of the x and y polarizations, in sqrt(W).
struct PolSample {
  cplx x{};
  cplx y{};

  friend bool operator==(const PolSample&, const PolSample&) = default;
};

/// M-PSK ring. Point k sits at sqrt(Es) * exp(j*pi*(2k+1)/M).
class Constellation {
 public:
  Constellation(int order, double energy);

  int order() const noexcept { return order_; }
  double energy() const noexcept { return energy_; }
  const std::vector<cplx>& points() const noexcept { return points_; }
  const cplx& operator[](std::size_t k) const { return points_[k]; }

  /// Phase of point k, in (0, 2*pi).
  double phase(int k) const noexcept { return std::numbers::pi * (2 * k + 1) / order_; }

 private:
  int order_;
  double energy_;
  std::vector<cplx> points_;
};

Constellation make_mpsk(int order, double energy);

enum class Amplification { lumped, distributed };

/// Physical link. `segments` is the span count for lumped links and the
/// discretization step count of the noise processes for distributed ones.
struct LinkConfig {
  Amplification amplification = Amplification::distributed;
  int segments = 500;
  double length_km = 9000.0;
  double alpha_db_per_km = 0.25;
  double gamma = 1.4;            // 1/(W km)
  double bandwidth_hz = 28e9;
  double carrier_hz = 193.55e12;
  double noise_figure_db = 6.0;

  double alpha() const noexcept { return alpha_db_per_km * std::numbers::ln10 / 10.0; }
  double segment_length_km() const noexcept { return length_km / segments; }
  void validate() const;
};

/// Link of the distributed-amplification SER experiments (9000 km, 28 GHz).
LinkConfig reference_distributed_link();
/// Lumped 45 x 90 km link of the dispersion-managed experiments.
LinkConfig reference_lumped_link();

struct NoiseSpec {
  double sigma0_sq = 0.0;  // per-span complex variance, W (lumped)
  double sigmad_sq = 0.0;  // noise density, W/km (distributed)
};

/// Effective nonlinear length of one span for lumped links; the step length
/// L/N_steps for distributed links.
double effective_length(const LinkConfig& link);

/// Spontaneous emission factor for a high-gain amplifier with the link's noise figure.
double spontaneous_emission_factor(const LinkConfig& link);

NoiseSpec noise_spec(const LinkConfig& link);

/// Total accumulated complex noise variance per polarization: L*sigma_d^2 or N*sigma_0^2.
double total_noise_variance(const LinkConfig& link, const NoiseSpec& noise);

struct SnrPoint {
  double rho_x = 0.0;
  double rho_y = 0.0;
};

/// |S_x|^2 is identified with the launch power per polarization.
SnrPoint snr_from_power(double power_w, const LinkConfig& link, const NoiseSpec& noise);

}  // namespace nlpn

#endif  // NLPN_MODEL_HPP
