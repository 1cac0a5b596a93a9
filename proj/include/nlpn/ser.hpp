#ifndef NLPN_SER_HPP
#define NLPN_SER_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "nlpn/calibration.hpp"
#include "nlpn/channel.hpp"
#include "nlpn/detectors.hpp"
#include "nlpn/stats.hpp"

namespace nlpn {

enum class ScenarioKind { pm, sp_same_bandwidth, sp_same_data_rate };

std::string_view to_string(ScenarioKind kind) noexcept;
ScenarioKind parse_scenario_kind(std::string_view name);

/// A transmission scenario over a base link. The same-data-rate SP scenario
/// runs at twice the symbol rate, so its optical bandwidth (and noise) doubles.
struct Scenario {
  ScenarioKind kind = ScenarioKind::pm;
  LinkConfig link;  // base (PM) link
  std::vector<double> power_grid_dbm;

  Multiplex multiplex() const noexcept {
    return kind == ScenarioKind::pm ? Multiplex::dual : Multiplex::single;
  }
  LinkConfig effective_link() const;
  Channel channel(ChannelOptions options = {}) const;
};

Scenario make_scenario(ScenarioKind kind, LinkConfig base, std::vector<double> power_grid_dbm);

/// Which error count the headline `ser` reports for PM: a 4D symbol is wrong
/// if either index is wrong (`per_symbol`), or errors are counted per
/// polarization index (`per_polarization`). Both counts are always kept.
enum class SerConvention { per_symbol, per_polarization };

std::string_view to_string(SerConvention c) noexcept;
SerConvention parse_ser_convention(std::string_view name);

struct SerPoint {
  double p_t_dbm = 0.0;
  double ser = 0.0;
  double half_width_95 = 0.0;
  std::uint64_t n_symbols = 0;
  std::uint64_t n_errors = 0;
  // Both conventions, for auditing.
  std::uint64_t symbol_errors = 0;
  std::uint64_t polarization_errors = 0;
  std::uint64_t polarization_trials = 0;
  std::uint64_t ml_fallbacks = 0;

  /// Binomial standard error sqrt(p (1 - p) / n) of `ser`.
  double standard_error() const;
};

/// Fills ser/half-width/n_errors from the raw counts under `convention`.
void finalize(SerPoint& p, SerConvention convention);

struct SerBudget {
  std::uint64_t min_errors = 100;
  std::uint64_t max_symbols = 100'000'000;
  std::uint64_t min_symbols = 0;
  std::uint64_t chunk = 1 << 14;
};

/// Monte-Carlo SER of several detectors on shared draws (common random
/// numbers). Uniform random symbols are sent through `channel`; chunks are
/// added until every detector has `min_errors` errors or `max_symbols` is hit.
std::vector<SerPoint> mc_ser(const std::vector<Detector>& detectors, const Channel& channel,
                             double p_t_dbm, const SerBudget& budget, SerConvention convention,
                             StreamKey key, int threads = 1);

SerPoint mc_ser(const Detector& detector, const Channel& channel, double p_t_dbm,
                const SerBudget& budget, SerConvention convention, StreamKey key,
                int threads = 1);

/// Per-polarization SER from the truncated cosine series of the compensated
/// residual phase: (M-1)/M - sum_k (2/M) sinc(k/M) c_k.
double series_ser(const Eigen::ArrayXd& coefficients, int order);

struct SeriesSer {
  double ser_x = 0.0;
  double ser_y = 0.0;
  double ser_symbol = 0.0;        // 1 - (1 - ser_x)(1 - ser_y), independence assumed
  double ser_polarization = 0.0;  // (ser_x + ser_y) / 2
  std::optional<double> ser_x_factored;  // 2D sources only: product-form coefficients
};

/// Sources are the residual CFs used by the detector under study (1D for
/// PM-Det1, 2D for PM-Det2); `terms` is the truncation order K.
SeriesSer series_ser_pm(const CoefficientSource& cf_x, const CoefficientSource& cf_y, int order,
                        int terms = 16);

struct SerCurve {
  DetectorKind detector;
  ScenarioKind scenario;
  std::vector<SerPoint> points;  // sorted by power
};

struct SweepOptions {
  int order = 4;
  CalibrationOptions calibration;
  SerBudget budget;
  SerConvention convention = SerConvention::per_polarization;
  ChannelOptions channel;
  int threads = 1;
};

/// Calibrates each power point on its own substream, then evaluates all
/// detectors on a shared, independent evaluation substream.
std::vector<SerCurve> sweep(const std::vector<DetectorKind>& detectors, const Scenario& scenario,
                            const SweepOptions& options, std::uint64_t seed);

/// Substream keys shared by the sweep and the CLI.
StreamKey calibration_key(std::uint64_t seed, ScenarioKind scenario, double p_t_dbm);
StreamKey evaluation_key(std::uint64_t seed, ScenarioKind scenario, double p_t_dbm);

/// Header plus one row per point: detector,scenario,p_t_dbm,ser,ci95,n_symbols,n_errors,seed
void write_csv_header(std::ostream& os);
void write_csv_rows(std::ostream& os, const SerCurve& curve, std::uint64_t seed);
std::string format_number(double v);

}  // namespace nlpn

#endif  // NLPN_SER_HPP
