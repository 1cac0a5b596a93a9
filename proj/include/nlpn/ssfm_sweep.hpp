#ifndef NLPN_SSFM_SWEEP_HPP
#define NLPN_SSFM_SWEEP_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "nlpn/ser.hpp"
#include "nlpn/ssfm.hpp"

namespace nlpn {

/// Where the detectors' rotation maps come from.
///  memoryless - the memoryless lumped channel at the same noise level
///  ssfm       - training blocks sent through the split-step link itself
enum class SsfmCalibrationSource { memoryless, ssfm };

std::string_view to_string(SsfmCalibrationSource source) noexcept;
SsfmCalibrationSource parse_calibration_source(std::string_view name);

struct SsfmSweepOptions {
  int order = 4;
  PulseConfig pulse;  // symbol rate is set per point
  /// When set, samples per symbol is doubled from pulse.samples_per_symbol
  /// until the sample period is at most this. Rectangular pulses need it:
  /// their edges ring under dispersion on a fixed time scale.
  std::optional<double> max_sample_period_ps;
  DmLinkOptions link;
  double beta2_ps2_per_km = -21.7;
  double step_km = 1.0;
  /// Per-span ASE variance at the matched-filter output. Default: one EDFA
  /// restoring the span loss, edfa_ase_variance(link).
  std::optional<double> ase_variance;
  std::size_t block_symbols = 4096;
  /// Counts symbols; whole blocks are simulated, `chunk` is ignored.
  SerBudget budget{100, 1 << 16, 0, 0};
  SsfmCalibrationSource calibration_source = SsfmCalibrationSource::memoryless;
  CalibrationOptions calibration;
  std::size_t training_blocks = 8;  // ssfm source only
  /// Kerr sign of the memoryless calibration channel; +1 matches the
  /// split-step solver's rotation.
  double kerr_sign = +1.0;
  SerConvention convention = SerConvention::per_polarization;
  int threads = 1;
};

struct SsfmCurve {
  DetectorKind detector;
  double symbol_rate_gbaud = 0.0;
  std::vector<SerPoint> points;  // one per launch power
};

/// SER of PM detectors over the dispersion-managed link for every
/// (symbol rate, launch power) pair. Blocks are independent waveforms on
/// their own substreams, so results do not depend on `threads`.
std::vector<SsfmCurve> ssfm_sweep(const std::vector<DetectorKind>& detectors,
                                  const LinkConfig& lumped_link,
                                  const std::vector<double>& p_t_dbm,
                                  const std::vector<double>& rates_gbaud,
                                  const SsfmSweepOptions& options, std::uint64_t seed);

/// Samples per symbol the sweep uses at `rate_gbaud`.
int samples_per_symbol_at(const SsfmSweepOptions& options, double rate_gbaud);

/// The ser CSV columns plus symbol_rate_gbaud.
void write_ssfm_csv_header(std::ostream& os);
void write_ssfm_csv_rows(std::ostream& os, const SsfmCurve& curve, std::uint64_t seed);

}  // namespace nlpn

#endif  // NLPN_SSFM_SWEEP_HPP
