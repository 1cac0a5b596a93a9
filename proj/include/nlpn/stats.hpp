#ifndef NLPN_STATS_HPP
#define NLPN_STATS_HPP

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nlpn/channel.hpp"
#include "nlpn/model.hpp"

namespace nlpn {

enum class Polarization { x, y };

/// Bin edges over the normalized amplitude r. The last bin absorbs overflow.
class AmplitudeGrid {
 public:
  explicit AmplitudeGrid(std::vector<double> edges);
  static AmplitudeGrid uniform(int bins, double max_r);
  /// 1D default for a given SNR: 200 bins over [0, sqrt(rho) + 6].
  static AmplitudeGrid for_snr(double rho, int bins = 200);

  int bins() const noexcept { return static_cast<int>(edges_.size()) - 1; }
  const std::vector<double>& edges() const noexcept { return edges_; }
  int bin(double r) const noexcept;
  double center(int b) const { return 0.5 * (edges_[b] + edges_[b + 1]); }

  friend bool operator==(const AmplitudeGrid& a, const AmplitudeGrid& b) {
    return a.edges_ == b.edges_;
  }

 private:
  std::vector<double> edges_;
  double inv_width_ = 0.0;  // > 0 when the edges are uniform
};

/// Source of the conditional Fourier coefficients C_k(r) = f_R(r) E[exp(jk Theta) | R = r]
/// of the residual phase. Detectors only consume arg C_1 and |C_k|, so any
/// implementation (empirical, closed form) can sit behind this interface.
class CoefficientSource {
 public:
  virtual ~CoefficientSource() = default;
  virtual int dimension() const = 0;
  virtual int order() const = 0;
  /// Unnormalized coefficient at the amplitude cell containing (rx, ry).
  virtual std::complex<double> coefficient(int k, double rx, double ry) const = 0;
  /// Integral of |C_k| over the amplitudes, in [0, 1].
  virtual double integrated_magnitude(int k) const = 0;
};

/// Amplitude-binned sums M_k(b) = sum over samples in b of exp(jk theta), k = 1..K.
class ConditionalCF final : public CoefficientSource {
 public:
  ConditionalCF(AmplitudeGrid grid, int order);
  ConditionalCF(AmplitudeGrid grid_x, AmplitudeGrid grid_y, int order);

  int dimension() const override { return grid_y_ ? 2 : 1; }
  int order() const override { return order_; }
  int bins() const noexcept { return static_cast<int>(counts_.size()); }
  const AmplitudeGrid& grid_x() const noexcept { return grid_x_; }
  const std::optional<AmplitudeGrid>& grid_y() const noexcept { return grid_y_; }

  int flat_bin(double rx, double ry = 0.0) const noexcept;

  void add(double theta, double rx, double ry = 0.0);
  /// `u` must have unit modulus: exp(j theta).
  void add_unit(std::complex<double> u, double rx, double ry = 0.0);
  void add_unit_to_bin(int flat, std::complex<double> u);

  /// Bin-wise sum of sums and counts. Grids and orders must match.
  ConditionalCF& merge(const ConditionalCF& other);

  std::complex<double> moment(int k, int flat) const { return sums_(k - 1, flat); }
  std::uint64_t count(int flat) const { return counts_[flat]; }
  std::uint64_t total() const noexcept { return total_; }
  const Eigen::ArrayXXcd& sums() const noexcept { return sums_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  std::complex<double> coefficient(int k, double rx, double ry) const override;
  /// c_k = (1/n) sum_b |M_k(b)|.
  double integrated_magnitude(int k) const override;
  Eigen::ArrayXd coefficients() const;
  /// 2D only: c_k from the best rank-1 (product-form) approximation of the
  /// table |M_k(bx, by)| / n, i.e. assuming C_k(r) = A_k(r_x) B_k(r_y).
  Eigen::ArrayXd factored_coefficients() const;

  /// Rebuilds a CF from stored sums and counts (calibration files).
  static ConditionalCF from_parts(AmplitudeGrid gx, std::optional<AmplitudeGrid> gy, int order,
                                  Eigen::ArrayXXcd sums, std::vector<std::uint64_t> counts);

 private:
  AmplitudeGrid grid_x_;
  std::optional<AmplitudeGrid> grid_y_;
  int order_;
  Eigen::ArrayXXcd sums_;  // order x bins
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Unit phasor of the residual phase arg(E) - arg(S) for one polarization.
std::complex<double> residual_phasor(const std::complex<double>& received,
                                     const std::complex<double>& sent);

/// Adds residual phases of `pol` to `cf`, binned on r_pol (1D) or (r_x, r_y) (2D).
void accumulate(ConditionalCF& cf, std::span<const ChannelDraw> draws,
                std::span<const PolSample> sent, Polarization pol);

ConditionalCF accumulate(std::span<const ChannelDraw> draws, std::span<const PolSample> sent,
                         const AmplitudeGrid& grid, int order, Polarization pol);
ConditionalCF accumulate(std::span<const ChannelDraw> draws, std::span<const PolSample> sent,
                         const AmplitudeGrid& grid_x, const AmplitudeGrid& grid_y, int order,
                         Polarization pol);

inline constexpr std::uint64_t default_min_count = 50;

/// Amplitude-indexed compensation angle theta_c, piecewise constant per bin.
/// Bins with fewer than `min_count` samples are unusable; lookups there fall
/// back to the nearest usable bin (nearest in bin-center distance).
class RotationMap {
 public:
  RotationMap(AmplitudeGrid grid_x, std::optional<AmplitudeGrid> grid_y,
              Eigen::ArrayXd theta, std::vector<bool> usable, double amplitude_scale);

  int dimension() const noexcept { return grid_y_ ? 2 : 1; }
  const AmplitudeGrid& grid_x() const noexcept { return grid_x_; }
  const std::optional<AmplitudeGrid>& grid_y() const noexcept { return grid_y_; }
  double amplitude_scale() const noexcept { return amplitude_scale_; }
  int bins() const noexcept { return static_cast<int>(theta_.size()); }

  int flat_bin(double rx, double ry = 0.0) const noexcept;
  bool usable(int flat) const { return usable_[flat]; }
  double theta(int flat) const { return theta_(flat); }
  const Eigen::ArrayXd& thetas() const noexcept { return theta_; }

  /// Compensation angle at normalized amplitude(s).
  double angle(double rx, double ry = 0.0) const { return theta_(fallback_[flat_bin(rx, ry)]); }
  /// Compensation angle at raw field magnitudes |E_x|, |E_y|.
  double angle_for_field(double ax, double ay = 0.0) const {
    return angle(ax / amplitude_scale_, ay / amplitude_scale_);
  }

 private:
  AmplitudeGrid grid_x_;
  std::optional<AmplitudeGrid> grid_y_;
  Eigen::ArrayXd theta_;
  std::vector<bool> usable_;
  std::vector<int> fallback_;
  double amplitude_scale_;
};

/// theta_c(b) = -arg M_1(b) from a 1D CF.
RotationMap rotation_map_sp(const ConditionalCF& cf, double amplitude_scale,
                            std::uint64_t min_count = default_min_count);
/// theta_c(bx, by) = -arg M_1(bx, by) from a 2D CF of one polarization's residual.
RotationMap rotation_map_pm(const ConditionalCF& cf2d, double amplitude_scale,
                            std::uint64_t min_count = default_min_count);

/// Periodic pdf 1/2pi + (1/pi) sum_k c_k cos(k theta) on (-pi, pi]. Negative
/// lobes of the truncated series are clipped to zero and the result
/// renormalized; `clipped()` reports whether that happened.
class PhasePdf {
 public:
  explicit PhasePdf(Eigen::ArrayXd coefficients);

  const Eigen::ArrayXd& coefficients() const noexcept { return coef_; }
  bool clipped() const noexcept { return clipped_; }
  double operator()(double theta) const;
  /// Probability of (-half_width, half_width], exact for unclipped series.
  double central_mass(double half_width) const;

 private:
  double raw(double theta) const;

  Eigen::ArrayXd coef_;
  bool clipped_ = false;
  double normalization_ = 1.0;
};

/// Truncates at K = min(order, cf.order()); order 0 yields the uniform pdf.
PhasePdf phase_pdf_series(const CoefficientSource& cf, int order);

/// Histogram estimate of f(theta_x, theta_y, r_x, r_y) for transmitted phases
/// (0, 0). With shear maps attached, phase coordinates are stored after the
/// amplitude-dependent rotation theta + theta_c(r): a bijection for each r
/// cell, so the cell masses still estimate the same density.
class JointDensity {
 public:
  JointDensity(AmplitudeGrid grid_x, AmplitudeGrid grid_y, int phase_bins,
               std::optional<RotationMap> shear_x = std::nullopt,
               std::optional<RotationMap> shear_y = std::nullopt);

  int phase_bins() const noexcept { return phase_bins_; }
  const AmplitudeGrid& grid_x() const noexcept { return grid_x_; }
  const AmplitudeGrid& grid_y() const noexcept { return grid_y_; }
  bool sheared() const noexcept { return shear_x_.has_value(); }
  const std::optional<RotationMap>& shear_x() const noexcept { return shear_x_; }
  const std::optional<RotationMap>& shear_y() const noexcept { return shear_y_; }
  std::uint64_t total() const noexcept { return total_; }
  std::size_t cells() const noexcept { return counts_.size(); }
  const std::vector<std::uint32_t>& counts() const noexcept { return counts_; }

  void add(double theta_x, double theta_y, double rx, double ry);
  JointDensity& merge(const JointDensity& other);

  /// Resolved amplitude cell and the phase offsets the shear applies there.
  struct Cell {
    std::size_t amplitude_offset;
    double shift_x;
    double shift_y;
  };
  Cell locate(double rx, double ry) const;
  std::uint32_t count_at(const Cell& cell, double theta_x, double theta_y) const;

  /// Normalized cell mass (all cells sum to 1).
  double mass(double theta_x, double theta_y, double rx, double ry) const;

  static JointDensity from_parts(AmplitudeGrid gx, AmplitudeGrid gy, int phase_bins,
                                 std::optional<RotationMap> sx, std::optional<RotationMap> sy,
                                 std::vector<std::uint32_t> counts);

 private:
  int phase_index(double theta) const noexcept;

  AmplitudeGrid grid_x_;
  AmplitudeGrid grid_y_;
  int phase_bins_;
  std::optional<RotationMap> shear_x_;
  std::optional<RotationMap> shear_y_;
  std::vector<std::uint32_t> counts_;  // [ax][ay][px][py]
  std::uint64_t total_ = 0;
};

/// Builds the histogram from draws de-rotated by their transmitted symbols.
JointDensity joint_density_grid(std::span<const ChannelDraw> draws,
                                std::span<const PolSample> sent, int phase_bins,
                                const AmplitudeGrid& grid_x, const AmplitudeGrid& grid_y,
                                std::optional<RotationMap> shear_x = std::nullopt,
                                std::optional<RotationMap> shear_y = std::nullopt);

}  // namespace nlpn

#endif  // NLPN_STATS_HPP
