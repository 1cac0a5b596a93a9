#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "nlpn/calibration.hpp"
#include "nlpn/error.hpp"
#include "nlpn/ser.hpp"
#include "nlpn/ssfm.hpp"

using namespace nlpn;
using std::numbers::pi;

namespace {

std::vector<PolSample> qpsk_block(std::size_t n, double power_w, std::uint64_t seed) {
  const Constellation c = make_mpsk(4, power_w);
  RngStream rng({seed, 0}, 0);
  std::vector<PolSample> s(n);
  for (auto& v : s) v = random_symbol(c, rng, Multiplex::dual);
  return s;
}

SpanPlan lossless_plan(double beta2, double gamma) {
  SpanPlan p;
  p.n_spans = 1;
  p.span_length_km = 90.0;
  p.step_km = 1.0;
  p.beta2_ps2_per_km = beta2;
  p.gamma = gamma;
  p.alpha_db_per_km = 0.0;
  return p;
}

PulseConfig rrc(double rate_gbaud, int sps = 16) {
  PulseConfig p;
  p.symbol_rate_hz = rate_gbaud * 1e9;
  p.samples_per_symbol = sps;
  return p;
}

double relative_rms(const WaveformGrid& a, const WaveformGrid& b) {
  const double diff = (a.x - b.x).abs2().sum() + (a.y - b.y).abs2().sum();
  return std::sqrt(diff / b.energy());
}

}  // namespace

TEST_CASE("dispersion coefficient of standard fiber") {
  CHECK(beta2_from_dispersion(17.0) == doctest::Approx(-21.68).epsilon(1e-3));
}

TEST_CASE("zero dispersion and loss: pure Kerr rotation by gamma L |E|^2") {
  const SpanPlan plan = lossless_plan(0.0, 1.4);
  const WaveformGrid in = modulate(qpsk_block(256, 1e-3, 1), rrc(2.0));
  const WaveformGrid out = propagate_span(in, plan);
  const Eigen::ArrayXd power = in.x.abs2() + in.y.abs2();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    const cplx rot = std::polar(1.0, plan.gamma * plan.span_length_km * power[i]);
    worst = std::max(worst, std::abs(out.x[i] - in.x[i] * rot) / std::sqrt(power.maxCoeff()));
    worst = std::max(worst, std::abs(out.y[i] - in.y[i] * rot) / std::sqrt(power.maxCoeff()));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("linear fiber: unitary dispersion and exact compensation") {
  const SpanPlan plan = lossless_plan(-21.7, 0.0);
  const WaveformGrid in = modulate(qpsk_block(256, 1e-3, 2), rrc(5.0));
  const WaveformGrid out = propagate_span(in, plan);
  CHECK(out.energy() == doctest::Approx(in.energy()).epsilon(1e-10));
  CHECK(relative_rms(out, in) > 0.1);  // dispersion did act
  CHECK(relative_rms(ideal_dcf(out, plan), in) < 1e-9);

  // Identity on a dispersion-free plan.
  CHECK(relative_rms(ideal_dcf(in, lossless_plan(0.0, 0.0)), in) < 1e-12);

  // Two compensators undo two spans.
  const WaveformGrid two = propagate_span(out, plan);
  CHECK(relative_rms(ideal_dcf(ideal_dcf(two, plan), plan), in) < 1e-9);

  // Commutes with a scalar gain.
  WaveformGrid scaled = out;
  scaled.x *= 3.0;
  scaled.y *= 3.0;
  WaveformGrid a = ideal_dcf(scaled, plan);
  WaveformGrid b = ideal_dcf(out, plan);
  b.x *= 3.0;
  b.y *= 3.0;
  CHECK(relative_rms(a, b) < 1e-12);
}

TEST_CASE("lossy fiber without Kerr effect attenuates by the span loss") {
  SpanPlan plan = lossless_plan(-21.7, 0.0);
  plan.alpha_db_per_km = 0.25;
  const WaveformGrid in = modulate(qpsk_block(128, 1e-3, 3), rrc(1.0));
  const WaveformGrid out = propagate_span(in, plan);
  CHECK(out.energy() / in.energy() == doctest::Approx(std::pow(10.0, -0.25 * 90 / 10)).epsilon(1e-10));
}

TEST_CASE("modulated RRC waveform carries the launch power") {
  for (double rate : {0.5, 2.0, 5.0}) {
    const WaveformGrid w = modulate(qpsk_block(4096, 2e-3, 4), rrc(rate));
    CHECK(w.average_power() == doctest::Approx(2e-3).epsilon(1e-3));
  }
}

TEST_CASE("RRC spectrum is confined to (1 + roll-off) Rs / 2") {
  const PulseConfig pulse = rrc(2.0);
  const WaveformGrid w = modulate(qpsk_block(1024, 1e-3, 5), pulse);
  const Eigen::Index n = w.size();
  // FFT through the spectrum of a single pulse: |P(f)|^2 against its peak.
  const Eigen::ArrayXcd p = pulse_spectrum(n, pulse);
  const double peak = p.abs2().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    const double f = (m <= n / 2 ? m : m - n) * pulse.sample_rate_hz() / n;
    if (std::abs(f) > 1.25 * pulse.symbol_rate_hz / 2 * (1 + 1e-9)) worst = std::max(worst, std::norm(p[m]) / peak);
  }
  CHECK(worst < 1e-4);
  CHECK(outer_band_fraction(w) < 1e-12);
}

TEST_CASE("rectangular pulse: flat top at the symbol power") {
  PulseConfig pulse = rrc(1.0, 16);
  pulse.shape = PulseShape::rectangular;
  std::vector<PolSample> s(8);
  const double a = std::sqrt(3e-3);
  s[3] = {cplx{0, a}, cplx{a, 0}};
  const WaveformGrid w = modulate(s, pulse);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const bool inside = i >= 48 && i < 64;
    CHECK(std::abs(w.x[i] - (inside ? s[3].x : cplx{})) < 1e-12);
    CHECK(std::norm(w.y[i]) == doctest::Approx(inside ? 3e-3 : 0.0).scale(1e-3));
  }
  // The matched filter returns the symbols.
  const auto back = matched_filter(w, pulse);
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(std::abs(back[k].x - s[k].x) < 1e-12);
}

TEST_CASE("invalid pulse and grid configurations") {
  const auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  CHECK(code_of([] { modulate(qpsk_block(64, 1e-3, 6), rrc(1.0, 1)); }) == Errc::invalid_config);
  CHECK(code_of([] { modulate(qpsk_block(48, 1e-3, 6), rrc(1.0, 16)); }) == Errc::invalid_config);
  SpanPlan bad = lossless_plan(0.0, 1.4);
  bad.step_km = 0.7;
  CHECK(code_of([&] { bad.validate(); }) == Errc::invalid_config);
  CHECK(parse_ase_model("signal-space") == AseModel::signal_space);
  CHECK(code_of([] { parse_ase_model("pink"); }) == Errc::invalid_config);
}

TEST_CASE("aliasing guard aborts when broadening reaches the grid edge") {
  const LinkConfig link = reference_lumped_link();
  SpanPlan plan = make_span_plan(link, beta2_from_dispersion(17.0), 0.0);
  plan.n_spans = 3;
  const std::vector<PolSample> s = qpsk_block(256, dbm_to_watt(18.0), 7);
  RngStream rng({7, 1}, 0);
  try {
    run_dm_link(s, rrc(5.0, 4), plan, rng, DmLinkOptions{.noise = false});
    FAIL("expected an aliasing error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::aliasing);
  }
  // The same link at a moderate power passes and reports the growth it saw.
  const std::vector<PolSample> quiet = qpsk_block(256, dbm_to_watt(0.0), 7);
  const DmLinkResult r = run_dm_link(quiet, rrc(5.0, 16), plan, rng, DmLinkOptions{.noise = false});
  CHECK(r.max_outer_band_fraction <= 1e-3);
}

TEST_CASE("halving the step changes the received field by less than 1e-3 RMS") {
  const LinkConfig link = reference_lumped_link();
  const SpanPlan coarse = make_span_plan(link, beta2_from_dispersion(17.0), 0.0, 1.0);
  const SpanPlan fine = make_span_plan(link, beta2_from_dispersion(17.0), 0.0, 0.5);
  for (double rate : {0.5, 5.0}) {
    WaveformGrid a = modulate(qpsk_block(256, dbm_to_watt(0.0), 8), rrc(rate));
    WaveformGrid b = a;
    const double gain = std::exp(coarse.alpha() * coarse.span_length_km / 2.0);
    for (int s = 0; s < coarse.n_spans; ++s) {
      a = ideal_dcf(propagate_span(std::move(a), coarse), coarse);
      b = ideal_dcf(propagate_span(std::move(b), fine), fine);
      a.x *= gain, a.y *= gain, b.x *= gain, b.y *= gain;
    }
    CAPTURE(rate);
    CHECK(relative_rms(a, b) < 1e-3);
  }
}

TEST_CASE("without Kerr effect each span adds its ASE variance at the matched filter") {
  const LinkConfig link = reference_lumped_link();
  const double ase = edfa_ase_variance(link);
  const double p = dbm_to_watt(0.0);
  for (AseModel model : {AseModel::white, AseModel::in_band, AseModel::signal_space}) {
    std::vector<double> variance;
    for (int spans : {1, 2, 4}) {
      SpanPlan plan = make_span_plan(link, beta2_from_dispersion(17.0), ase, 90.0);
      plan.gamma = 0.0;
      plan.n_spans = spans;
      RngStream rng({9, std::uint64_t(spans)}, 0);
      double acc = 0.0;
      std::size_t count = 0;
      for (int block = 0; block < 8; ++block) {
        const auto s = qpsk_block(8192, p, 100 + block);
        const DmLinkResult r = run_dm_link(s, rrc(2.0, 4), plan, rng, DmLinkOptions{.ase_model = model});
        CHECK(r.amplitude_scale == doctest::Approx(std::sqrt(spans * ase)));
        for (std::size_t i = 0; i < s.size(); ++i) {
          acc += std::norm(r.received[i].x - s[i].x) + std::norm(r.received[i].y - s[i].y);
          count += 2;
        }
      }
      variance.push_back(acc / count);
    }
    CAPTURE(to_string(model));
    CHECK(variance[0] == doctest::Approx(ase).epsilon(0.02));
    CHECK(variance[1] == doctest::Approx(2 * ase).epsilon(0.02));
    CHECK(variance[2] == doctest::Approx(4 * ase).epsilon(0.02));
    // Least-squares slope through the origin.
    const double slope = (1 * variance[0] + 2 * variance[1] + 4 * variance[2]) / 21.0;
    CHECK(slope == doctest::Approx(ase).epsilon(0.02));
  }
}

TEST_CASE("zero dispersion at 0.5 Gbaud reproduces the memoryless model") {
  // NRZ pulses with one noise sample per symbol keep each symbol's power
  // constant over its slot, so without dispersion every slot sees a
  // memoryless lumped channel. The split-step link amplifies after each
  // span, so the oracle rotates span k by the power before amplifier k adds
  // its noise.
  const LinkConfig link = reference_lumped_link();
  const double ase = edfa_ase_variance(link);
  const double p_dbm = 0.0, p = dbm_to_watt(p_dbm);
  const double leff = effective_length(link);
  const SpanPlan plan = make_span_plan(link, 0.0, ase, 90.0);
  PulseConfig pulse = rrc(0.5, 4);
  pulse.shape = PulseShape::rectangular;

  const Channel memoryless(link, NoiseSpec{ase, 0.0}, ChannelOptions{.kerr_sign = +1.0});
  CalibrationOptions co;
  co.draws = 1'000'000;
  co.bins_1d = 60;
  co.bins_2d = 20;
  co.build_density = false;
  const auto cal = std::make_shared<const Calibration>(calibrate(memoryless, p, 4, co, {10, 1}));
  const Detector det1(DetectorKind::pm_det1, cal), det2(DetectorKind::pm_det2, cal);
  const Constellation c = make_mpsk(4, p);

  struct Count {
    std::uint64_t e1 = 0, e2 = 0, trials = 0;
    void add(const Detector& d1, const Detector& d2, const PolSample& e, int kx, int ky) {
      const Decision a = d1(e), b = d2(e);
      e1 += (a.kx != kx) + (*a.ky != ky);
      e2 += (b.kx != kx) + (*b.ky != ky);
      trials += 2;
    }
  };

  Count oracle;
  for (std::uint64_t i = 0; i < 400'000; ++i) {
    RngStream rng({10, 2}, i);
    const int kx = rng.uniform_int(4), ky = rng.uniform_int(4);
    const PolSample s{c[kx], c[ky]};
    PolSample e = s;
    double phi = 0.0;
    for (int span = 0; span < link.segments; ++span) {
      phi += link.gamma * leff * (std::norm(e.x) + std::norm(e.y));
      e.x += rng.complex_normal(ase);
      e.y += rng.complex_normal(ase);
    }
    const cplx rot = std::polar(1.0, phi);
    oracle.add(det1, det2, {e.x * rot, e.y * rot}, kx, ky);
  }

  Count split;
  RngStream rng({10, 3}, 0);
  for (int block = 0; block < 16; ++block) {
    std::vector<PolSample> s(4096);
    std::vector<std::pair<int, int>> k(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      k[i] = {rng.uniform_int(4), rng.uniform_int(4)};
      s[i] = {c[k[i].first], c[k[i].second]};
    }
    const DmLinkResult r = run_dm_link(s, pulse, plan, rng, DmLinkOptions{.ase_model = AseModel::signal_space});
    for (std::size_t i = 0; i < s.size(); ++i) split.add(det1, det2, r.received[i], k[i].first, k[i].second);
  }

  for (const auto& [a, b] : {std::pair{split.e1, oracle.e1}, std::pair{split.e2, oracle.e2}}) {
    const double sa = double(a) / split.trials, sb = double(b) / oracle.trials;
    const double se = std::sqrt(sa * (1 - sa) / split.trials + sb * (1 - sb) / oracle.trials);
    CAPTURE(sa);
    CAPTURE(sb);
    CHECK(sb > 1e-3);
    CHECK(std::abs(sa - sb) < 3.0 * se);
  }
}
