#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <set>
#include <sstream>

#include "nlpn/error.hpp"

namespace nlpn::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(Errc::invalid_config, where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(where, "unknown key '" + k + "'");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

std::int64_t integer(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (std::floor(v) != v || std::abs(v) > 9.0e15) fail(where, "expected an integer");
  return static_cast<std::int64_t>(v);
}

std::uint64_t count(const json& j, const std::string& where) {
  const std::int64_t v = integer(j, where);
  if (v < 0) fail(where, "must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

template <typename F>
auto named(const std::string& where, F&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

/// Either a list or {"from": a, "to": b, "step": s}, both ends included.
std::vector<double> grid(const json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  } else {
    only_keys(j, where, {"from", "to", "step"});
    if (!j.contains("from") || !j.contains("to") || !j.contains("step"))
      fail(where, "a range needs from, to and step");
    const double a = number(j["from"], where + ".from");
    const double b = number(j["to"], where + ".to");
    const double s = number(j["step"], where + ".step");
    if (!(s > 0.0) || b < a) fail(where, "need step > 0 and to >= from");
    const auto n = static_cast<int>(std::floor((b - a) / s + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(a + i * s);
  }
  if (out.empty()) fail(where, "empty power grid");
  return out;
}

std::vector<DetectorKind> detectors(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of detector names");
  std::vector<DetectorKind> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const std::string name = text(j[i], w);
    out.push_back(named(w, [&] { return parse_detector_kind(name); }));
  }
  if (out.empty()) fail(where, "no detectors selected; valid: " + valid_detector_names());
  return out;
}

void link(const json& j, const std::string& where, LinkConfig& l) {
  only_keys(j, where,
            {"amplification", "segments", "length_km", "alpha_db_per_km", "gamma",
             "bandwidth_ghz", "carrier_thz", "noise_figure_db"});
  if (j.contains("amplification")) {
    const std::string a = text(j["amplification"], where + ".amplification");
    if (a == "lumped") l.amplification = Amplification::lumped;
    else if (a == "distributed") l.amplification = Amplification::distributed;
    else fail(where + ".amplification", "expected lumped or distributed");
  }
  if (j.contains("segments")) l.segments = static_cast<int>(integer(j["segments"], where + ".segments"));
  if (j.contains("length_km")) l.length_km = number(j["length_km"], where + ".length_km");
  if (j.contains("alpha_db_per_km"))
    l.alpha_db_per_km = number(j["alpha_db_per_km"], where + ".alpha_db_per_km");
  if (j.contains("gamma")) l.gamma = number(j["gamma"], where + ".gamma");
  if (j.contains("bandwidth_ghz")) l.bandwidth_hz = number(j["bandwidth_ghz"], where + ".bandwidth_ghz") * 1e9;
  if (j.contains("carrier_thz")) l.carrier_hz = number(j["carrier_thz"], where + ".carrier_thz") * 1e12;
  if (j.contains("noise_figure_db"))
    l.noise_figure_db = number(j["noise_figure_db"], where + ".noise_figure_db");
  named(where, [&] { l.validate(); return 0; });
}

void calibration(const json& j, const std::string& where, CalibrationOptions& c) {
  only_keys(j, where,
            {"draws", "cf_order", "bins_1d", "bins_2d", "min_count", "density",
             "density_phase_bins", "density_amplitude_bins", "density_shear",
             "density_symmetrize"});
  if (j.contains("draws")) c.draws = count(j["draws"], where + ".draws");
  if (j.contains("cf_order")) c.order = static_cast<int>(integer(j["cf_order"], where + ".cf_order"));
  if (j.contains("bins_1d")) c.bins_1d = static_cast<int>(integer(j["bins_1d"], where + ".bins_1d"));
  if (j.contains("bins_2d")) c.bins_2d = static_cast<int>(integer(j["bins_2d"], where + ".bins_2d"));
  if (j.contains("min_count")) c.min_count = count(j["min_count"], where + ".min_count");
  if (j.contains("density")) c.build_density = boolean(j["density"], where + ".density");
  if (j.contains("density_phase_bins"))
    c.density_phase_bins = static_cast<int>(integer(j["density_phase_bins"], where + ".density_phase_bins"));
  if (j.contains("density_amplitude_bins"))
    c.density_amplitude_bins =
        static_cast<int>(integer(j["density_amplitude_bins"], where + ".density_amplitude_bins"));
  if (j.contains("density_shear")) c.density_shear = boolean(j["density_shear"], where + ".density_shear");
  if (j.contains("density_symmetrize"))
    c.density_symmetrize = boolean(j["density_symmetrize"], where + ".density_symmetrize");
  if (c.draws == 0) fail(where + ".draws", "must be positive");
  if (c.order < 1) fail(where + ".cf_order", "must be >= 1");
  if (c.bins_1d < 1 || c.bins_2d < 1 || c.density_phase_bins < 1 || c.density_amplitude_bins < 1)
    fail(where, "bin counts must be positive");
}

void budget(const json& j, const std::string& where, SerBudget& b) {
  only_keys(j, where, {"min_errors", "max_symbols", "min_symbols", "chunk"});
  if (j.contains("min_errors")) b.min_errors = count(j["min_errors"], where + ".min_errors");
  if (j.contains("max_symbols")) b.max_symbols = count(j["max_symbols"], where + ".max_symbols");
  if (j.contains("min_symbols")) b.min_symbols = count(j["min_symbols"], where + ".min_symbols");
  if (j.contains("chunk")) b.chunk = count(j["chunk"], where + ".chunk");
  if (b.max_symbols == 0) fail(where + ".max_symbols", "must be positive");
}

double kerr_sign(const json& j, const std::string& where) {
  const double s = number(j, where);
  if (s != 1.0 && s != -1.0) fail(where, "must be +1 or -1");
  return s;
}

void channel(const json& j, const std::string& where, ChannelOptions& c) {
  only_keys(j, where, {"method", "bridge_modes", "kerr_sign"});
  if (j.contains("method")) {
    const std::string m = text(j["method"], where + ".method");
    if (m == "bridge") c.method = DistributedMethod::bridge;
    else if (m == "random-walk") c.method = DistributedMethod::random_walk;
    else fail(where + ".method", "expected bridge or random-walk");
  }
  if (j.contains("bridge_modes"))
    c.bridge_modes = static_cast<int>(integer(j["bridge_modes"], where + ".bridge_modes"));
  if (j.contains("kerr_sign")) c.kerr_sign = kerr_sign(j["kerr_sign"], where + ".kerr_sign");
}

SsfmSection ssfm(const json& j, const std::string& where, int order) {
  only_keys(j, where,
            {"link", "dispersion_ps_nm_km", "rates_gbaud", "power_grid_dbm", "detectors", "pulse",
             "ase_model", "ase_variance", "noise", "step_km", "block_symbols", "budget",
             "calibration_source", "calibration", "training_blocks", "kerr_sign",
             "aliasing_tolerance", "max_sample_period_ps"});
  SsfmSection s;
  auto& o = s.options;
  o.order = order;
  if (j.contains("link")) link(j["link"], where + ".link", s.link);
  if (s.link.amplification != Amplification::lumped)
    fail(where + ".link", "the dispersion-managed link needs lumped amplification");
  if (j.contains("dispersion_ps_nm_km"))
    s.dispersion_ps_nm_km = number(j["dispersion_ps_nm_km"], where + ".dispersion_ps_nm_km");
  o.beta2_ps2_per_km = beta2_from_dispersion(s.dispersion_ps_nm_km);
  if (j.contains("rates_gbaud")) s.rates_gbaud = grid(j["rates_gbaud"], where + ".rates_gbaud");
  for (double r : s.rates_gbaud)
    if (!(r > 0.0)) fail(where + ".rates_gbaud", "symbol rates must be positive");
  if (!j.contains("power_grid_dbm")) fail(where, "missing power_grid_dbm");
  s.power_grid_dbm = grid(j["power_grid_dbm"], where + ".power_grid_dbm");
  if (j.contains("detectors")) s.detectors = detectors(j["detectors"], where + ".detectors");
  for (auto d : s.detectors)
    if (d == DetectorKind::sp_ml) fail(where + ".detectors", "SP-ML does not apply to the two-polarization link");
  if (j.contains("pulse")) {
    const json& p = j["pulse"];
    const std::string w = where + ".pulse";
    only_keys(p, w, {"shape", "roll_off", "samples_per_symbol"});
    if (p.contains("shape")) {
      const std::string name = text(p["shape"], w + ".shape");
      o.pulse.shape = named(w + ".shape", [&] { return parse_pulse_shape(name); });
    }
    if (p.contains("roll_off")) o.pulse.roll_off = number(p["roll_off"], w + ".roll_off");
    if (p.contains("samples_per_symbol"))
      o.pulse.samples_per_symbol = static_cast<int>(integer(p["samples_per_symbol"], w + ".samples_per_symbol"));
  }
  if (j.contains("ase_model")) {
    const std::string name = text(j["ase_model"], where + ".ase_model");
    o.link.ase_model = named(where + ".ase_model", [&] { return parse_ase_model(name); });
  }
  if (j.contains("ase_variance")) {
    o.ase_variance = number(j["ase_variance"], where + ".ase_variance");
    if (*o.ase_variance < 0.0) fail(where + ".ase_variance", "must be >= 0");
  }
  if (j.contains("noise")) o.link.noise = boolean(j["noise"], where + ".noise");
  if (j.contains("step_km")) o.step_km = number(j["step_km"], where + ".step_km");
  if (j.contains("block_symbols")) o.block_symbols = count(j["block_symbols"], where + ".block_symbols");
  if (j.contains("budget")) budget(j["budget"], where + ".budget", o.budget);
  if (j.contains("calibration_source")) {
    const std::string name = text(j["calibration_source"], where + ".calibration_source");
    o.calibration_source = named(where + ".calibration_source", [&] { return parse_calibration_source(name); });
  }
  if (j.contains("calibration")) calibration(j["calibration"], where + ".calibration", o.calibration);
  if (j.contains("training_blocks")) o.training_blocks = count(j["training_blocks"], where + ".training_blocks");
  if (j.contains("kerr_sign")) o.kerr_sign = kerr_sign(j["kerr_sign"], where + ".kerr_sign");
  if (j.contains("max_sample_period_ps")) {
    o.max_sample_period_ps = number(j["max_sample_period_ps"], where + ".max_sample_period_ps");
    if (!(*o.max_sample_period_ps > 0.0)) fail(where + ".max_sample_period_ps", "must be positive");
  }
  if (j.contains("aliasing_tolerance"))
    o.link.aliasing_tolerance = number(j["aliasing_tolerance"], where + ".aliasing_tolerance");
  named(where, [&] {
    make_span_plan(s.link, o.beta2_ps2_per_km, 0.0, o.step_km).validate();
    return 0;
  });
  return s;
}

}  // namespace

RunConfig parse_run_config(const std::string& text_in, const std::filesystem::path& source) {
  const std::string where = source.empty() ? std::string("config") : source.string();
  json j;
  try {
    j = json::parse(text_in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(where, std::string("not valid JSON: ") + e.what());
  }
  only_keys(j, where,
            {"seed", "output_dir", "calibration_dir", "threads", "order", "link", "power_grid_dbm",
             "scenarios", "calibration", "budget", "convention", "channel", "ssfm"});
  RunConfig c;
  c.source = source;
  if (!j.contains("seed")) fail(where, "missing seed (runs are never seeded from the clock)");
  c.seed = count(j["seed"], where + ".seed");
  if (j.contains("output_dir")) c.output_dir = text(j["output_dir"], where + ".output_dir");
  if (j.contains("calibration_dir")) c.calibration_dir = text(j["calibration_dir"], where + ".calibration_dir");
  if (j.contains("threads")) c.threads = static_cast<int>(integer(j["threads"], where + ".threads"));
  if (c.threads < 1) fail(where + ".threads", "must be >= 1");
  if (j.contains("order")) c.sweep.order = static_cast<int>(integer(j["order"], where + ".order"));
  if (c.sweep.order < 2) fail(where + ".order", "M-PSK needs M >= 2");
  if (j.contains("link")) link(j["link"], where + ".link", c.link);
  if (j.contains("power_grid_dbm")) c.power_grid_dbm = grid(j["power_grid_dbm"], where + ".power_grid_dbm");
  if (j.contains("scenarios")) {
    const json& s = j["scenarios"];
    if (!s.is_array()) fail(where + ".scenarios", "expected a list");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string w = where + ".scenarios[" + std::to_string(i) + "]";
      only_keys(s[i], w, {"kind", "detectors"});
      ScenarioSelection sel;
      if (!s[i].contains("kind")) fail(w, "missing kind");
      const std::string kind = text(s[i]["kind"], w + ".kind");
      sel.kind = named(w + ".kind", [&] { return parse_scenario_kind(kind); });
      if (!s[i].contains("detectors")) fail(w, "missing detectors");
      sel.detectors = detectors(s[i]["detectors"], w + ".detectors");
      for (auto d : sel.detectors) {
        const bool pm_detector = d != DetectorKind::sp_ml && d != DetectorKind::uncompensated;
        if (sel.kind == ScenarioKind::pm ? d == DetectorKind::sp_ml : pm_detector)
          fail(w + ".detectors", std::string(to_string(d)) + " does not apply to " + kind);
      }
      c.scenarios.push_back(std::move(sel));
    }
  }
  if (!c.scenarios.empty() && c.power_grid_dbm.empty()) fail(where, "scenarios need power_grid_dbm");
  if (j.contains("calibration")) calibration(j["calibration"], where + ".calibration", c.sweep.calibration);
  if (j.contains("budget")) budget(j["budget"], where + ".budget", c.sweep.budget);
  if (j.contains("convention")) {
    const std::string name = text(j["convention"], where + ".convention");
    c.sweep.convention = named(where + ".convention", [&] { return parse_ser_convention(name); });
  }
  if (j.contains("channel")) channel(j["channel"], where + ".channel", c.sweep.channel);
  if (j.contains("ssfm")) c.ssfm = ssfm(j["ssfm"], where + ".ssfm", c.sweep.order);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), Errc::invalid_config, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path);
}

}  // namespace nlpn::cli
