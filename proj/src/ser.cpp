#include "nlpn/ser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "nlpn/error.hpp"
#include "nlpn/parallel.hpp"

namespace nlpn {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::uint64_t milli(double dbm) { return static_cast<std::uint64_t>(std::llround(dbm * 1000.0)); }

}  // namespace

std::string_view to_string(ScenarioKind kind) noexcept {
  switch (kind) {
    case ScenarioKind::pm: return "PM";
    case ScenarioKind::sp_same_bandwidth: return "SP-same-bandwidth";
    case ScenarioKind::sp_same_data_rate: return "SP-same-data-rate";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  const std::string n = lower(name);
  for (auto k : {ScenarioKind::pm, ScenarioKind::sp_same_bandwidth, ScenarioKind::sp_same_data_rate})
    if (n == lower(to_string(k))) return k;
  throw Error(Errc::invalid_config, "unknown scenario '" + std::string(name) +
                                        "'; valid: PM, SP-same-bandwidth, SP-same-data-rate");
}

LinkConfig Scenario::effective_link() const {
  LinkConfig l = link;
  if (kind == ScenarioKind::sp_same_data_rate) l.bandwidth_hz *= 2.0;
  return l;
}

Channel Scenario::channel(ChannelOptions options) const {
  options.multiplex = multiplex();
  return Channel(effective_link(), options);
}

Scenario make_scenario(ScenarioKind kind, LinkConfig base, std::vector<double> power_grid_dbm) {
  base.validate();
  std::sort(power_grid_dbm.begin(), power_grid_dbm.end());
  return Scenario{kind, base, std::move(power_grid_dbm)};
}

std::string_view to_string(SerConvention c) noexcept {
  return c == SerConvention::per_symbol ? "per-symbol" : "per-polarization";
}

SerConvention parse_ser_convention(std::string_view name) {
  const std::string n = lower(name);
  if (n == "per-symbol") return SerConvention::per_symbol;
  if (n == "per-polarization") return SerConvention::per_polarization;
  throw Error(Errc::invalid_config,
              "unknown SER convention '" + std::string(name) + "'; valid: per-symbol, per-polarization");
}

double SerPoint::standard_error() const { return half_width_95 / 1.959963984540054; }

void finalize(SerPoint& p, SerConvention convention) {
  double trials;
  if (convention == SerConvention::per_symbol) {
    p.n_errors = p.symbol_errors;
    trials = static_cast<double>(p.n_symbols);
  } else {
    p.n_errors = p.polarization_errors;
    trials = static_cast<double>(p.polarization_trials);
  }
  p.ser = trials > 0 ? static_cast<double>(p.n_errors) / trials : 0.0;
  p.half_width_95 = trials > 0 ? 1.959963984540054 * std::sqrt(p.ser * (1.0 - p.ser) / trials) : 0.0;
}

std::vector<SerPoint> mc_ser(const std::vector<Detector>& detectors, const Channel& channel,
                             double p_t_dbm, const SerBudget& budget, SerConvention convention,
                             StreamKey key, int threads) {
  require(!detectors.empty(), Errc::invalid_parameter, "no detectors to evaluate");
  require(budget.max_symbols >= 1, Errc::invalid_parameter, "symbol budget must be >= 1");
  const int m = detectors.front().calibration().order;
  const double power = dbm_to_watt(p_t_dbm);
  const Constellation constellation = make_mpsk(m, power);
  const bool dual = channel.multiplex() == Multiplex::dual;
  const std::size_t nd = detectors.size();

  struct Counts {
    std::uint64_t n = 0;
    std::vector<std::uint64_t> sym, pol, fallback;
  };
  const auto fresh = [&] { return Counts{0, std::vector<std::uint64_t>(nd), std::vector<std::uint64_t>(nd), std::vector<std::uint64_t>(nd)}; };

  const ChunkPlan plan{budget.max_symbols, budget.chunk};
  Counts total = fresh();
  ordered_chunks<Counts>(
      plan.chunks(), threads,
      [&](std::uint64_t c) {
        Counts k = fresh();
        for (std::uint64_t i = plan.begin(c); i < plan.end(c); ++i) {
          RngStream rng(key, i);
          const int kx = rng.uniform_int(m);
          const int ky = dual ? rng.uniform_int(m) : 0;
          PolSample s{constellation[kx], dual ? constellation[ky] : cplx{}};
          const ChannelDraw d = channel(s, rng);
          for (std::size_t j = 0; j < nd; ++j) {
            const Decision dec = detectors[j](d.received);
            const int ex = dec.kx != kx;
            const int ey = dual && dec.ky.value_or(-1) != ky;
            k.pol[j] += ex + ey;
            k.sym[j] += (ex || ey);
            k.fallback[j] += dec.fallback;
          }
          ++k.n;
        }
        return k;
      },
      [&](Counts&& k) {
        total.n += k.n;
        for (std::size_t j = 0; j < nd; ++j) {
          total.sym[j] += k.sym[j];
          total.pol[j] += k.pol[j];
          total.fallback[j] += k.fallback[j];
        }
        if (total.n < budget.min_symbols) return true;
        for (std::size_t j = 0; j < nd; ++j) {
          const auto errors = convention == SerConvention::per_symbol ? total.sym[j] : total.pol[j];
          if (errors < budget.min_errors) return true;
        }
        return false;
      });

  std::vector<SerPoint> out(nd);
  for (std::size_t j = 0; j < nd; ++j) {
    auto& p = out[j];
    p.p_t_dbm = p_t_dbm;
    p.n_symbols = total.n;
    p.symbol_errors = total.sym[j];
    p.polarization_errors = total.pol[j];
    p.polarization_trials = dual ? 2 * total.n : total.n;
    p.ml_fallbacks = total.fallback[j];
    finalize(p, convention);
  }
  return out;
}

SerPoint mc_ser(const Detector& detector, const Channel& channel, double p_t_dbm,
                const SerBudget& budget, SerConvention convention, StreamKey key, int threads) {
  return mc_ser(std::vector<Detector>{detector}, channel, p_t_dbm, budget, convention, key,
                threads)
      .front();
}

double series_ser(const Eigen::ArrayXd& coefficients, int order) {
  require(coefficients.size() >= 1, Errc::invalid_parameter, "series needs K >= 1 terms");
  const double m = order;
  double ser = (m - 1.0) / m;
  for (Eigen::Index k = 1; k <= coefficients.size(); ++k) {
    const double x = std::numbers::pi * static_cast<double>(k) / m;
    ser -= 2.0 / m * std::sin(x) / x * coefficients(k - 1);
  }
  return ser;
}

SeriesSer series_ser_pm(const CoefficientSource& cf_x, const CoefficientSource& cf_y, int order,
                        int terms) {
  require(terms >= 1, Errc::invalid_parameter, "series needs K >= 1 terms");
  const auto coefs = [&](const CoefficientSource& s) {
    const int k = std::min(terms, s.order());
    Eigen::ArrayXd c(k);
    for (int i = 1; i <= k; ++i) c(i - 1) = s.integrated_magnitude(i);
    return c;
  };
  SeriesSer out;
  out.ser_x = series_ser(coefs(cf_x), order);
  out.ser_y = series_ser(coefs(cf_y), order);
  out.ser_symbol = 1.0 - (1.0 - out.ser_x) * (1.0 - out.ser_y);
  out.ser_polarization = 0.5 * (out.ser_x + out.ser_y);
  if (const auto* cf = dynamic_cast<const ConditionalCF*>(&cf_x); cf && cf->dimension() == 2) {
    Eigen::ArrayXd f = cf->factored_coefficients();
    out.ser_x_factored = series_ser(f.head(std::min<Eigen::Index>(terms, f.size())), order);
  }
  return out;
}

StreamKey calibration_key(std::uint64_t seed, ScenarioKind scenario, double p_t_dbm) {
  return StreamKey{seed, 0}
      .derive("calibration")
      .derive(static_cast<std::uint64_t>(scenario))
      .derive(milli(p_t_dbm));
}

StreamKey evaluation_key(std::uint64_t seed, ScenarioKind scenario, double p_t_dbm) {
  return StreamKey{seed, 0}
      .derive("evaluation")
      .derive(static_cast<std::uint64_t>(scenario))
      .derive(milli(p_t_dbm));
}

std::vector<SerCurve> sweep(const std::vector<DetectorKind>& detectors, const Scenario& scenario,
                            const SweepOptions& options, std::uint64_t seed) {
  require(!detectors.empty(), Errc::invalid_config, "sweep needs at least one detector");
  std::vector<SerCurve> curves;
  for (auto d : detectors) curves.push_back({d, scenario.kind, {}});
  const Channel channel = scenario.channel(options.channel);
  for (double p : scenario.power_grid_dbm) {
    auto cal = std::make_shared<const Calibration>(
        calibrate(channel, dbm_to_watt(p), options.order, options.calibration,
                  calibration_key(seed, scenario.kind, p), options.threads));
    std::vector<Detector> bound;
    for (auto d : detectors) bound.emplace_back(d, cal);
    const auto points = mc_ser(bound, channel, p, options.budget, options.convention,
                               evaluation_key(seed, scenario.kind, p), options.threads);
    for (std::size_t j = 0; j < points.size(); ++j) curves[j].points.push_back(points[j]);
  }
  return curves;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_csv_header(std::ostream& os) {
  os << "detector,scenario,p_t_dbm,ser,ci95,n_symbols,n_errors,seed\n";
}

void write_csv_rows(std::ostream& os, const SerCurve& curve, std::uint64_t seed) {
  for (const auto& p : curve.points)
    os << to_string(curve.detector) << ',' << to_string(curve.scenario) << ','
       << format_number(p.p_t_dbm) << ',' << format_number(p.ser) << ','
       << format_number(p.half_width_95) << ',' << p.n_symbols << ',' << p.n_errors << ','
       << seed << '\n';
}

}  // namespace nlpn
