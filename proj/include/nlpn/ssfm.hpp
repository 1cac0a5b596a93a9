#ifndef NLPN_SSFM_HPP
#define NLPN_SSFM_HPP

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "nlpn/model.hpp"
#include "nlpn/rng.hpp"

namespace nlpn {

enum class PulseShape { root_raised_cosine, rectangular };

std::string_view to_string(PulseShape shape) noexcept;
PulseShape parse_pulse_shape(std::string_view name);

struct PulseConfig {
  PulseShape shape = PulseShape::root_raised_cosine;
  double roll_off = 0.25;
  int samples_per_symbol = 16;
  double symbol_rate_hz = 1e9;

  double sample_rate_hz() const noexcept { return symbol_rate_hz * samples_per_symbol; }
  /// Two-sided bandwidth the pulse occupies: (1 + roll-off) R_s for RRC, the
  /// main lobe 2 R_s for rectangular pulses.
  double occupied_bandwidth_hz() const noexcept;
  void validate() const;
};

/// Sampled dual-polarization field, sqrt(W). Length is n_symbols * sps and a
/// power of two.
struct WaveformGrid {
  int samples_per_symbol = 0;
  std::size_t n_symbols = 0;
  double sample_period_ps = 0.0;
  Eigen::ArrayXcd x;
  Eigen::ArrayXcd y;

  Eigen::Index size() const noexcept { return x.size(); }
  /// Mean of |x|^2 and |y|^2 over the grid, per polarization.
  double average_power() const;
  double energy() const;
};

struct SpanPlan {
  int n_spans = 45;
  double span_length_km = 90.0;
  double step_km = 1.0;
  double beta2_ps2_per_km = -21.7;
  double gamma = 1.4;
  double alpha_db_per_km = 0.25;
  /// Per-span ASE variance referred to the matched-filter output, W. How it
  /// is spread over the waveform is set by AseModel.
  double ase_variance = 0.0;

  double alpha() const noexcept;
  int steps_per_span() const;
  double total_length_km() const noexcept { return n_spans * span_length_km; }
  void validate() const;
};

/// beta2 in ps^2/km from D in ps/(nm km).
double beta2_from_dispersion(double d_ps_per_nm_km, double wavelength_nm = 1550.0);

/// ASE power of one EDFA that restores the span loss, 2 h nu n_sp (G - 1) W,
/// with W the link's optical bandwidth.
double edfa_ase_variance(const LinkConfig& lumped_link);

/// Plan over a lumped link: spans, length, alpha and gamma are taken from it.
SpanPlan make_span_plan(const LinkConfig& lumped_link, double beta2_ps2_per_km,
                        double ase_variance, double step_km = 1.0);

/// Angular frequency per FFT bin, rad/ps, in FFT order.
Eigen::ArrayXd angular_frequency(Eigen::Index n, double sample_period_ps);

/// Pulse spectrum on an n-point grid, scaled so that sum |p[n]|^2 = sps.
Eigen::ArrayXcd pulse_spectrum(Eigen::Index n, const PulseConfig& pulse);

WaveformGrid modulate(std::span<const PolSample> symbols, const PulseConfig& pulse);

/// One span of fiber, symmetric split-step with loss folded into the
/// nonlinear step length.
WaveformGrid propagate_span(WaveformGrid w, const SpanPlan& plan);

/// Lossless inverse of one span's dispersion.
WaveformGrid ideal_dcf(WaveformGrid w, const SpanPlan& plan);

/// Matched filter and symbol-rate sampling.
std::vector<PolSample> matched_filter(const WaveformGrid& w, const PulseConfig& pulse);

/// Fraction of the field's power beyond 0.8 of the Nyquist frequency.
double outer_band_fraction(const WaveformGrid& w);

/// How each amplifier's ASE enters the waveform. Every model is scaled so the
/// matched-filter output carries `ase_variance` per symbol and span.
///  white         - white over the whole simulated band
///  in_band       - white within the pulse's occupied band only
///  signal_space  - one complex Gaussian per symbol, shaped by the pulse
enum class AseModel { white, in_band, signal_space };

std::string_view to_string(AseModel model) noexcept;
AseModel parse_ase_model(std::string_view name);

struct DmLinkOptions {
  bool noise = true;
  AseModel ase_model = AseModel::white;
  /// Abort when the fraction of power beyond 80% of the simulated band grows
  /// by more than this over its value at launch. The expected share of white
  /// ASE is discounted. Rectangular pulses keep a sinc tail there that
  /// dispersion and the Kerr term reshape; they need a looser bound.
  double aliasing_tolerance = 1e-3;
};

struct DmLinkResult {
  std::vector<PolSample> received;
  double amplitude_scale = 1.0;  // sqrt(N * ase_variance)
  double max_outer_band_fraction = 0.0;  // growth over launch
};

/// modulate, then per span: fiber, EDFA gain, ideal DCF, ASE;
/// finally the matched filter. Throws Errc::aliasing when broadening reaches
/// the edge of the grid.
DmLinkResult run_dm_link(std::span<const PolSample> symbols, const PulseConfig& pulse,
                         const SpanPlan& plan, RngStream& rng, const DmLinkOptions& options = {});

}  // namespace nlpn

#endif  // NLPN_SSFM_HPP
