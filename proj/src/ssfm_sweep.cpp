#include "nlpn/ssfm_sweep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <string>

#include "nlpn/calibration.hpp"
#include "nlpn/error.hpp"
#include "nlpn/parallel.hpp"

namespace nlpn {

namespace {

std::uint64_t milli(double v) {
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(v * 1000.0)));
}

struct Block {
  std::vector<int> kx, ky;
  std::vector<PolSample> sent;
  std::vector<PolSample> received;
  double amplitude_scale = 1.0;
};

Block run_block(const Constellation& c, const PulseConfig& pulse, const SpanPlan& plan,
                const DmLinkOptions& link, std::size_t n, StreamKey key, std::uint64_t index) {
  RngStream rng(key, index);
  const int m = c.order();
  Block b;
  b.kx.resize(n);
  b.ky.resize(n);
  b.sent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.kx[i] = rng.uniform_int(m);
    b.ky[i] = rng.uniform_int(m);
    b.sent[i] = {c[b.kx[i]], c[b.ky[i]]};
  }
  DmLinkResult r = run_dm_link(b.sent, pulse, plan, rng, link);
  b.received = std::move(r.received);
  b.amplitude_scale = r.amplitude_scale;
  return b;
}

}  // namespace

std::string_view to_string(SsfmCalibrationSource source) noexcept {
  return source == SsfmCalibrationSource::ssfm ? "ssfm" : "memoryless";
}

SsfmCalibrationSource parse_calibration_source(std::string_view name) {
  if (name == "ssfm") return SsfmCalibrationSource::ssfm;
  if (name == "memoryless") return SsfmCalibrationSource::memoryless;
  throw Error(Errc::invalid_config, "unknown calibration source '" + std::string(name) +
                                        "'; valid: memoryless, ssfm");
}

int samples_per_symbol_at(const SsfmSweepOptions& options, double rate_gbaud) {
  int sps = options.pulse.samples_per_symbol;
  if (!options.max_sample_period_ps) return sps;
  require(*options.max_sample_period_ps > 0.0, Errc::invalid_config,
          "max_sample_period_ps must be positive");
  const double symbol_ps = 1e3 / rate_gbaud;
  while (symbol_ps / sps > *options.max_sample_period_ps * (1.0 + 1e-12)) {
    require(sps < (1 << 20), Errc::invalid_config, "sample period bound needs too many samples");
    sps *= 2;
  }
  return sps;
}

std::vector<SsfmCurve> ssfm_sweep(const std::vector<DetectorKind>& detectors,
                                  const LinkConfig& lumped_link,
                                  const std::vector<double>& p_t_dbm,
                                  const std::vector<double>& rates_gbaud,
                                  const SsfmSweepOptions& options, std::uint64_t seed) {
  require(!detectors.empty(), Errc::invalid_parameter, "no detectors to evaluate");
  for (auto d : detectors)
    require(d != DetectorKind::sp_ml, Errc::invalid_parameter,
            "the split-step link carries two polarizations; SP-ML does not apply");
  require(options.block_symbols > 0 && std::has_single_bit(options.block_symbols),
          Errc::invalid_config, "block_symbols must be a power of two");
  require(options.budget.max_symbols >= 1, Errc::invalid_parameter, "symbol budget must be >= 1");

  const double ase = options.ase_variance.value_or(edfa_ase_variance(lumped_link));
  const SpanPlan plan =
      make_span_plan(lumped_link, options.beta2_ps2_per_km, ase, options.step_km);
  CalibrationOptions cal_options = options.calibration;
  cal_options.build_density =
      std::find(detectors.begin(), detectors.end(), DetectorKind::pm_ml) != detectors.end();

  const StreamKey root = StreamKey{seed, 0}.derive("ssfm");
  const std::size_t nd = detectors.size();
  const std::size_t n = options.block_symbols;
  const std::uint64_t max_blocks = (options.budget.max_symbols + n - 1) / n;

  std::vector<SsfmCurve> curves;
  for (double rate : rates_gbaud) {
    PulseConfig pulse = options.pulse;
    pulse.symbol_rate_hz = rate * 1e9;
    pulse.samples_per_symbol = samples_per_symbol_at(options, rate);
    pulse.validate();
    const std::size_t first = curves.size();
    for (auto d : detectors) curves.push_back({d, rate, {}});

    for (double p : p_t_dbm) {
      const double power = dbm_to_watt(p);
      const Constellation c = make_mpsk(options.order, power);
      const StreamKey point = root.derive(milli(rate)).derive(milli(p));

      std::shared_ptr<const Calibration> cal;
      if (options.calibration_source == SsfmCalibrationSource::memoryless) {
        ChannelOptions co;
        co.kerr_sign = options.kerr_sign;
        const Channel channel(lumped_link, NoiseSpec{ase, 0.0}, co);
        // Shared by every rate: the memoryless channel has no notion of it.
        cal = std::make_shared<const Calibration>(calibrate(
            channel, power, options.order, cal_options,
            root.derive("memoryless").derive(milli(p)), options.threads));
      } else {
        std::vector<PolSample> sent, received;
        double scale = 1.0;
        ordered_chunks<Block>(
            options.training_blocks, options.threads,
            [&](std::uint64_t b) {
              return run_block(c, pulse, plan, options.link, n, point.derive("training"), b);
            },
            [&](Block&& b) {
              sent.insert(sent.end(), b.sent.begin(), b.sent.end());
              received.insert(received.end(), b.received.begin(), b.received.end());
              scale = b.amplitude_scale;
              return true;
            });
        cal = std::make_shared<const Calibration>(calibrate_from_samples(
            sent, received, power, scale, options.order, Multiplex::dual, cal_options));
      }
      std::vector<Detector> bound;
      for (auto d : detectors) bound.emplace_back(d, cal);

      std::uint64_t symbols = 0;
      std::vector<std::uint64_t> sym(nd), pol(nd), fallback(nd);
      ordered_chunks<Block>(
          max_blocks, options.threads,
          [&](std::uint64_t b) {
            return run_block(c, pulse, plan, options.link, n, point.derive("evaluation"), b);
          },
          [&](Block&& b) {
            for (std::size_t i = 0; i < n; ++i) {
              for (std::size_t j = 0; j < nd; ++j) {
                const Decision dec = bound[j](b.received[i]);
                const int ex = dec.kx != b.kx[i];
                const int ey = dec.ky.value_or(-1) != b.ky[i];
                pol[j] += ex + ey;
                sym[j] += (ex || ey);
                fallback[j] += dec.fallback;
              }
            }
            symbols += n;
            if (symbols < options.budget.min_symbols) return true;
            for (std::size_t j = 0; j < nd; ++j) {
              const auto errors =
                  options.convention == SerConvention::per_symbol ? sym[j] : pol[j];
              if (errors < options.budget.min_errors) return true;
            }
            return false;
          });

      for (std::size_t j = 0; j < nd; ++j) {
        SerPoint sp;
        sp.p_t_dbm = p;
        sp.n_symbols = symbols;
        sp.symbol_errors = sym[j];
        sp.polarization_errors = pol[j];
        sp.polarization_trials = 2 * symbols;
        sp.ml_fallbacks = fallback[j];
        finalize(sp, options.convention);
        curves[first + j].points.push_back(sp);
      }
    }
  }
  return curves;
}

void write_ssfm_csv_header(std::ostream& os) {
  os << "detector,scenario,p_t_dbm,ser,ci95,n_symbols,n_errors,seed,symbol_rate_gbaud\n";
}

void write_ssfm_csv_rows(std::ostream& os, const SsfmCurve& curve, std::uint64_t seed) {
  for (const auto& p : curve.points)
    os << to_string(curve.detector) << ',' << to_string(ScenarioKind::pm) << ','
       << format_number(p.p_t_dbm) << ',' << format_number(p.ser) << ','
       << format_number(p.half_width_95) << ',' << p.n_symbols << ',' << p.n_errors << ','
       << seed << ',' << format_number(curve.symbol_rate_gbaud) << '\n';
}

}  // namespace nlpn
