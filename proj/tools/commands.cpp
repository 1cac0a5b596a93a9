#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "nlpn/calibration.hpp"
#include "nlpn/calibration_io.hpp"
#include "nlpn/circular.hpp"
#include "nlpn/error.hpp"

namespace nlpn::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json link_json(const LinkConfig& l) {
  return {{"amplification", l.amplification == Amplification::lumped ? "lumped" : "distributed"},
          {"segments", l.segments},
          {"length_km", l.length_km},
          {"alpha_db_per_km", l.alpha_db_per_km},
          {"gamma", l.gamma},
          {"bandwidth_ghz", l.bandwidth_hz / 1e9},
          {"carrier_thz", l.carrier_hz / 1e12},
          {"noise_figure_db", l.noise_figure_db}};
}

ordered_json manifest_head(const char* command, const RunConfig& c) {
  return {{"command", command},
          {"tool_version", tool_version},
          {"config", c.source.string()},
          {"seed", c.seed},
          {"threads", c.threads},
          {"started_utc", utc_now()}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << text;
  require(static_cast<bool>(os), Errc::io_error, "cannot write " + path.string());
}

SweepOptions sweep_options(const RunConfig& c) {
  SweepOptions o = c.sweep;
  o.threads = c.threads;
  return o;
}

Calibration calibrate_point(const RunConfig& c, ScenarioKind kind, double p) {
  const Scenario scenario = make_scenario(kind, c.link, {p});
  const SweepOptions o = sweep_options(c);
  return calibrate(scenario.channel(o.channel), dbm_to_watt(p), o.order, o.calibration,
                   calibration_key(c.seed, kind, p), o.threads);
}

/// Share of the samples that landed in bins below min_count.
double sparse_share(const ConditionalCF& cf, const RotationMap& map) {
  std::uint64_t sparse = 0;
  for (int b = 0; b < cf.bins(); ++b)
    if (!map.usable(b)) sparse += cf.count(b);
  return cf.total() ? static_cast<double>(sparse) / static_cast<double>(cf.total()) : 0.0;
}

ordered_json map_statistics(const char* name, const ConditionalCF& cf, const RotationMap& map,
                            std::uint64_t min_count, const std::string& point, std::ostream& log) {
  int usable = 0;
  for (int b = 0; b < map.bins(); ++b) usable += map.usable(b);
  const double share = sparse_share(cf, map);
  if (share > 1e-3)
    log << "warning: " << point << ": " << name << " map: " << format_number(share * 100.0)
        << "% of samples fall in bins with fewer than " << min_count
        << " draws (nearest usable bin used there); raise calibration.draws\n";
  return {{"map", name}, {"bins", map.bins()}, {"usable_bins", usable}, {"sparse_sample_share", share}};
}

std::string point_label(ScenarioKind kind, double p) {
  return std::string(to_string(kind)) + " at " + format_number(p) + " dBm";
}

ordered_json files_json(const std::vector<fs::path>& files) {
  ordered_json a = ordered_json::array();
  for (const auto& f : files) a.push_back(f.string());
  return a;
}

std::string calibrate_hint(const RunConfig& c) {
  std::string cmd = "nlpn calibrate";
  if (!c.source.empty()) cmd += " --config " + c.source.string();
  cmd += " --seed " + std::to_string(c.seed);
  cmd += " --out " + c.output_dir.string();
  return cmd;
}

ordered_json point_json(const SerPoint& p) {
  const double sym = p.n_symbols ? static_cast<double>(p.symbol_errors) / p.n_symbols : 0.0;
  const double pol = p.polarization_trials
                         ? static_cast<double>(p.polarization_errors) / p.polarization_trials
                         : 0.0;
  return {{"p_t_dbm", p.p_t_dbm},
          {"n_symbols", p.n_symbols},
          {"symbol_errors", p.symbol_errors},
          {"polarization_errors", p.polarization_errors},
          {"polarization_trials", p.polarization_trials},
          {"ser_per_symbol", sym},
          {"ser_per_polarization", pol},
          {"ml_fallbacks", p.ml_fallbacks}};
}

}  // namespace

void cmd_calibrate(const RunConfig& c, std::ostream& log) {
  require(!c.scenarios.empty(), Errc::invalid_config, "config selects no scenarios to calibrate");
  ordered_json manifest = manifest_head("calibrate", c);
  manifest["link"] = link_json(c.link);
  manifest["draws"] = c.sweep.calibration.draws;
  manifest["points"] = ordered_json::array();
  const fs::path root = c.calibration_root();
  for (const auto& sel : c.scenarios) {
    const Multiplex mux = make_scenario(sel.kind, c.link, {}).multiplex();
    for (double p : c.power_grid_dbm) {
      const std::string label = point_label(sel.kind, p);
      log << "calibrating " << label << '\n';
      const Calibration cal = calibrate_point(c, sel.kind, p);
      const CalibrationFiles files = calibration_files(root, sel.kind, p);
      save_calibration(cal, {sel.kind, p, c.seed, c.sweep.calibration.draws}, files);
      ordered_json stats = ordered_json::array();
      const auto min_count = c.sweep.calibration.min_count;
      stats.push_back(map_statistics("1D x", *cal.cf_x, *cal.map_x, min_count, label, log));
      if (mux == Multiplex::dual) {
        stats.push_back(map_statistics("1D y", *cal.cf_y, *cal.map_y, min_count, label, log));
        stats.push_back(map_statistics("2D x", *cal.cf2d_x, *cal.map2d_x, min_count, label, log));
        stats.push_back(map_statistics("2D y", *cal.cf2d_y, *cal.map2d_y, min_count, label, log));
      }
      manifest["points"].push_back(
          {{"scenario", to_string(sel.kind)},
           {"p_t_dbm", p},
           {"files", files_json(files.expected(mux, cal.density.has_value()))},
           {"maps", stats}});
    }
  }
  manifest["finished_utc"] = utc_now();
  write_text(root / "manifest.json", manifest.dump(2) + "\n");
}

void cmd_ser_sweep(const RunConfig& c, bool calibrate_missing, std::ostream& log) {
  require(!c.scenarios.empty(), Errc::invalid_config, "config selects no scenarios to sweep");
  const fs::path root = c.calibration_root();
  const SweepOptions o = sweep_options(c);

  // Fail before any work if a calibration is missing.
  if (!calibrate_missing) {
    std::vector<std::string> missing;
    for (const auto& sel : c.scenarios) {
      const Multiplex mux = make_scenario(sel.kind, c.link, {}).multiplex();
      const bool needs_density =
          std::find(sel.detectors.begin(), sel.detectors.end(), DetectorKind::pm_ml) !=
          sel.detectors.end();
      for (double p : c.power_grid_dbm)
        for (const auto& f : calibration_files(root, sel.kind, p).expected(mux, needs_density))
          if (!fs::exists(f)) missing.push_back(f.string());
    }
    if (!missing.empty())
      throw Error(Errc::calibration_required,
                  std::to_string(missing.size()) + " calibration file(s) missing, first " +
                      missing.front() + "; run `" + calibrate_hint(c) +
                      "` first or pass --calibrate");
  }

  std::ostringstream csv;
  write_csv_header(csv);
  ordered_json manifest = manifest_head("ser-sweep", c);
  manifest["convention"] = to_string(o.convention);
  manifest["link"] = link_json(c.link);
  manifest["budget"] = {{"min_errors", o.budget.min_errors},
                        {"max_symbols", o.budget.max_symbols},
                        {"min_symbols", o.budget.min_symbols}};
  manifest["curves"] = ordered_json::array();

  for (const auto& sel : c.scenarios) {
    const Scenario scenario = make_scenario(sel.kind, c.link, c.power_grid_dbm);
    const Channel channel = scenario.channel(o.channel);
    std::vector<SerCurve> curves;
    for (auto d : sel.detectors) curves.push_back({d, sel.kind, {}});
    std::vector<ordered_json> calibration_sources;
    for (double p : c.power_grid_dbm) {
      const CalibrationFiles files = calibration_files(root, sel.kind, p);
      std::shared_ptr<const Calibration> cal;
      if (fs::exists(files.map1d_x)) {
        cal = std::make_shared<const Calibration>(
            load_calibration(files, scenario.multiplex(), {sel.kind, p, c.seed, 0}));
        calibration_sources.push_back(files.map1d_x.parent_path().string());
      } else {
        log << "calibrating " << point_label(sel.kind, p) << " in-run\n";
        cal = std::make_shared<const Calibration>(calibrate_point(c, sel.kind, p));
        calibration_sources.push_back("in-run");
      }
      std::vector<Detector> bound;
      for (auto d : sel.detectors) bound.emplace_back(d, cal);
      log << "evaluating " << point_label(sel.kind, p) << '\n';
      const auto points = mc_ser(bound, channel, p, o.budget, o.convention,
                                 evaluation_key(c.seed, sel.kind, p), o.threads);
      for (std::size_t j = 0; j < points.size(); ++j) curves[j].points.push_back(points[j]);
    }
    for (const auto& curve : curves) {
      write_csv_rows(csv, curve, c.seed);
      ordered_json pts = ordered_json::array();
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        ordered_json pj = point_json(curve.points[i]);
        pj["calibration"] = calibration_sources[i];
        pts.push_back(std::move(pj));
      }
      manifest["curves"].push_back(
          {{"scenario", to_string(sel.kind)}, {"detector", to_string(curve.detector)}, {"points", pts}});
    }
  }
  write_text(c.output_dir / "ser.csv", csv.str());
  manifest["csv"] = "ser.csv";
  manifest["finished_utc"] = utc_now();
  write_text(c.output_dir / "ser_manifest.json", manifest.dump(2) + "\n");
}

void cmd_ssfm_sweep(const RunConfig& c, std::ostream& log) {
  require(c.ssfm.has_value(), Errc::invalid_config, "config has no ssfm section");
  const SsfmSection& s = *c.ssfm;
  for (double r : s.rates_gbaud)
    if (r < 0.5 || r > 5.0)
      log << "warning: symbol rate " << format_number(r)
          << " Gbaud is outside the studied 0.5-5 Gbaud range; running anyway\n";
  SsfmSweepOptions o = s.options;
  o.threads = c.threads;
  log << "split-step sweep over " << s.rates_gbaud.size() << " rate(s) x "
      << s.power_grid_dbm.size() << " power(s)\n";
  const auto curves = ssfm_sweep(s.detectors, s.link, s.power_grid_dbm, s.rates_gbaud, o, c.seed);

  std::ostringstream csv;
  write_ssfm_csv_header(csv);
  ordered_json manifest = manifest_head("ssfm-sweep", c);
  const double ase = o.ase_variance.value_or(edfa_ase_variance(s.link));
  manifest["convention"] = to_string(o.convention);
  manifest["link"] = link_json(s.link);
  manifest["dispersion_ps_nm_km"] = s.dispersion_ps_nm_km;
  manifest["beta2_ps2_per_km"] = o.beta2_ps2_per_km;
  manifest["step_km"] = o.step_km;
  manifest["pulse"] = {{"shape", to_string(o.pulse.shape)},
                       {"roll_off", o.pulse.roll_off},
                       {"samples_per_symbol", o.pulse.samples_per_symbol}};
  manifest["ase_model"] = to_string(o.link.ase_model);
  manifest["ase_variance_per_span_w"] = ase;
  manifest["calibration_source"] = to_string(o.calibration_source);
  manifest["kerr_sign"] = o.kerr_sign;
  manifest["block_symbols"] = o.block_symbols;
  manifest["curves"] = ordered_json::array();
  for (const auto& curve : curves) {
    write_ssfm_csv_rows(csv, curve, c.seed);
    ordered_json pts = ordered_json::array();
    for (const auto& p : curve.points) pts.push_back(point_json(p));
    manifest["curves"].push_back({{"detector", to_string(curve.detector)},
                                  {"symbol_rate_gbaud", curve.symbol_rate_gbaud},
                                  {"samples_per_symbol", samples_per_symbol_at(o, curve.symbol_rate_gbaud)},
                                  {"points", pts}});
  }
  write_text(c.output_dir / "ssfm.csv", csv.str());
  manifest["csv"] = "ssfm.csv";
  manifest["finished_utc"] = utc_now();
  write_text(c.output_dir / "ssfm_manifest.json", manifest.dump(2) + "\n");
}

bool cmd_validate(const RunConfig& c, std::ostream& out) {
  bool all = true;
  const auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    all = all && ok;
  };
  const StreamKey root = StreamKey{c.seed, 0}.derive("validate");
  const int m = c.sweep.order;

  // Kerr rotation keeps the amplitude of the linear part.
  {
    const Channel ch(c.link, c.sweep.channel);
    const Constellation k = make_mpsk(m, dbm_to_watt(c.power_grid_dbm.empty() ? -10.0 : c.power_grid_dbm.back()));
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      RngStream rng(root.derive("amplitude"), i);
      const PolSample s = random_symbol(k, rng, Multiplex::dual);
      const ChannelDraw d = ch(s, rng);
      worst = std::max({worst, std::abs(std::abs(d.received.x) - std::abs(d.linear_part.x)),
                        std::abs(std::abs(d.received.y) - std::abs(d.linear_part.y))});
    }
    report("amplitude-preserving rotation", worst < 1e-12, "max ||E| - |E_lin|| = " + format_number(worst));
  }

  // AWGN oracle: gamma = 0, 4-PSK at 10 dB SNR against 2Q(sqrt(rho)) - Q^2(sqrt(rho)).
  if (m == 4) {
    LinkConfig linear = c.link;
    linear.gamma = 0.0;
    ChannelOptions co = c.sweep.channel;
    co.multiplex = Multiplex::single;
    const Channel ch(linear, co);
    const double rho = 10.0;
    const double power = rho * ch.amplitude_scale() * ch.amplitude_scale();
    const double q = 0.5 * std::erfc(std::sqrt(rho) / std::sqrt(2.0));
    const double exact = 2.0 * q - q * q;
    CalibrationOptions cal_options;
    cal_options.draws = 100'000;
    cal_options.bins_1d = 50;
    const auto cal = std::make_shared<const Calibration>(
        calibrate(ch, power, m, cal_options, root.derive("awgn-cal"), c.threads));
    SerBudget budget{0, 200'000, 200'000, 1 << 14};
    const SerPoint p = mc_ser(Detector(DetectorKind::uncompensated, cal), ch, watt_to_dbm(power),
                              budget, SerConvention::per_polarization, root.derive("awgn"), c.threads);
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(p.n_symbols));
    report("AWGN 4-PSK oracle", std::abs(p.ser - exact) <= 3.0 * 1.96 * se,
           "MC " + format_number(p.ser) + " vs closed form " + format_number(exact));

    // Linear channel: compensation angles vanish.
    double worst = 0.0;
    for (int b = 0; b < cal->map_x->bins(); ++b)
      if (cal->cf_x->count(b) >= 10'000) worst = std::max(worst, std::abs(cal->map_x->theta(b)));
    report("linear-channel rotation map", worst < 0.01,
           "max |theta_c| over well-populated bins = " + format_number(worst) + " rad");
  } else {
    out << "SKIP AWGN 4-PSK oracle: order " << m << '\n';
  }

  // Mode recovery of wrapped Gaussians from the first trigonometric moment.
  {
    bool ok = true;
    double worst = 0.0;
    int case_index = 0;
    for (double mu : {-3.0, -1.0, 0.0, 1.0, 3.0})
      for (double sigma : {0.1, 0.5, 1.0}) {
        CircularMoments mom;
        for (std::uint64_t i = 0; i < 20'000; ++i) {
          RngStream rng(root.derive("wrapped").derive(static_cast<std::uint64_t>(case_index)), i);
          mom.add(mu + sigma * rng.normal());
        }
        const double err = std::abs(wrap_phase(mom.mean_direction() - mu));
        worst = std::max(worst, err / mom.standard_error());
        ok = ok && err <= 3.0 * mom.standard_error();
        ++case_index;
      }
    report("wrapped-Gaussian mode recovery", ok,
           "worst error " + format_number(worst) + " standard errors");
  }

  // Determinism across thread counts on a small sweep.
  if (!c.scenarios.empty() && !c.power_grid_dbm.empty()) {
    SweepOptions o = c.sweep;
    o.calibration.draws = std::min<std::uint64_t>(o.calibration.draws, 100'000);
    o.calibration.build_density = false;
    o.budget = {0, 20'000, 20'000, 4096};
    const auto& sel = c.scenarios.front();
    std::vector<DetectorKind> kinds;
    for (auto d : sel.detectors)
      if (d != DetectorKind::pm_ml) kinds.push_back(d);
    if (!kinds.empty()) {
      const Scenario sc = make_scenario(sel.kind, c.link, {c.power_grid_dbm.front()});
      std::string text[2];
      for (int t = 0; t < 2; ++t) {
        o.threads = t == 0 ? 1 : 3;
        std::ostringstream os;
        for (const auto& curve : sweep(kinds, sc, o, c.seed)) write_csv_rows(os, curve, c.seed);
        text[t] = os.str();
      }
      report("thread-count determinism", text[0] == text[1], "1 vs 3 workers");
    }
  }
  return all;
}

}  // namespace nlpn::cli
