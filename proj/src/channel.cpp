#include "nlpn/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlpn/error.hpp"

namespace nlpn {
namespace {

// Received amplitudes are normalized by the link's total noise; a noiseless
// override keeps the nominal normalizer so r stays finite.
double amplitude_normalizer(const LinkConfig& link, const NoiseSpec& noise) {
  double total = total_noise_variance(link, noise);
  if (!(total > 0.0)) total = total_noise_variance(link, noise_spec(link));
  return std::sqrt(total);
}

ChannelDraw finish(const PolSample& linear, double phi_x, double phi_y, double scale,
                   double kerr_sign) {
  ChannelDraw d;
  d.linear_part = linear;
  d.phi_x = phi_x;
  d.phi_y = phi_y;
  d.phi_nl = phi_x + phi_y;
  const cplx rot = std::polar(1.0, kerr_sign * d.phi_nl);
  d.received = {linear.x * rot, linear.y * rot};
  d.r_x = std::abs(d.received.x) / scale;
  d.r_y = std::abs(d.received.y) / scale;
  return d;
}

// Partial-sum accumulation shared by the lumped link and the literal
// distributed random walk: returns (endpoint, sum_i |s + W_i|^2).
std::pair<cplx, double> walk(cplx s, int steps, double variance, RngStream& rng) {
  cplx acc{};
  double sum = 0.0;
  for (int i = 0; i < steps; ++i) {
    acc += rng.complex_normal(variance);
    sum += std::norm(s + acc);
  }
  return {acc, sum};
}

}  // namespace

WienerBridgeSampler::WienerBridgeSampler(int steps, int modes) : steps_(steps) {
  require(steps >= 1, Errc::invalid_parameter, "bridge sampler needs >= 1 step");
  require(modes >= 0, Errc::invalid_parameter, "bridge mode count must be >= 0");
  const int n = steps;
  const int total_modes = n - 1;
  const int kept = std::min(modes, total_modes);
  const double norm = std::sqrt(2.0 / n);
  for (int k = 1; k <= total_modes; ++k) {
    const double s = std::sin(k * std::numbers::pi / (2.0 * n));
    const double mu = 1.0 / (4.0 * s * s);
    double g = 0.0;
    double h = 0.0;
    for (int i = 1; i < n; ++i) {
      const double v = std::sin(k * std::numbers::pi * i / n);
      g += v;
      h += i * v;
    }
    g *= norm;
    h *= norm;
    if (k <= kept) {
      eigen_.push_back(mu);
      weight_g_.push_back(std::sqrt(mu) * g);
      weight_h_.push_back(std::sqrt(mu) * h);
    } else {
      tail_gg_ += mu * g * g;
      tail_hh_ += mu * h * h;
      tail_gh_ += mu * g * h;
      tail_mean_ += mu;
      tail_sd_ += mu * mu;
    }
  }
  tail_sd_ = std::sqrt(tail_sd_);
}

WienerBridgeSampler::PathStats WienerBridgeSampler::sample(cplx signal, double step_variance,
                                                           RngStream& rng) const {
  const double n = steps_;
  const double sd = std::sqrt(step_variance);
  const cplx endpoint = sd * std::sqrt(n) * rng.complex_normal(1.0);

  cplx g{};  // sum_i B_i / sd
  cplx h{};  // sum_i i B_i / sd
  double q = 0.0;
  for (std::size_t k = 0; k < eigen_.size(); ++k) {
    const cplx eta = rng.complex_normal(1.0);
    g += weight_g_[k] * eta;
    h += weight_h_[k] * eta;
    q += eigen_[k] * std::norm(eta);
  }
  if (tail_gg_ > 0.0) {
    const cplx z1 = rng.complex_normal(1.0);
    const cplx z2 = rng.complex_normal(1.0);
    const double a = std::sqrt(tail_gg_);
    const double c = tail_gh_ / a;
    g += a * z1;
    h += c * z1 + std::sqrt(std::max(0.0, tail_hh_ - c * c)) * z2;
  }
  if (tail_mean_ > 0.0) q += std::max(0.0, tail_mean_ + tail_sd_ * rng.normal());

  // sum_i |S + (i/N) W_N|^2 in closed form
  const double deterministic = n * std::norm(signal) +
                               (n + 1.0) * std::real(std::conj(signal) * endpoint) +
                               std::norm(endpoint) * (n + 1.0) * (2.0 * n + 1.0) / (6.0 * n);
  const double cross =
      2.0 * sd * std::real(std::conj(signal) * g + std::conj(endpoint) * h / n);
  const double power_sum = std::max(0.0, deterministic + cross + step_variance * q);
  return {endpoint, power_sum};
}

ChannelDraw propagate_lumped(const PolSample& s, const LinkConfig& link, const NoiseSpec& noise,
                             RngStream& rng, Multiplex multiplex, double kerr_sign) {
  require(link.amplification == Amplification::lumped, Errc::wrong_amplification_kind,
          "propagate_lumped requires a lumped link");
  const double leff = effective_length(link);
  const auto [nx, sum_x] = walk(s.x, link.segments, noise.sigma0_sq, rng);
  PolSample linear{s.x + nx, {}};
  double phi_y = 0.0;
  if (multiplex == Multiplex::dual) {
    const auto [ny, sum_y] = walk(s.y, link.segments, noise.sigma0_sq, rng);
    linear.y = s.y + ny;
    phi_y = link.gamma * leff * sum_y;
  }
  return finish(linear, link.gamma * leff * sum_x, phi_y, amplitude_normalizer(link, noise),
                kerr_sign);
}

ChannelDraw propagate_distributed(const PolSample& s, const LinkConfig& link,
                                  const NoiseSpec& noise, RngStream& rng, Multiplex multiplex,
                                  double kerr_sign) {
  require(link.amplification == Amplification::distributed, Errc::wrong_amplification_kind,
          "propagate_distributed requires a distributed link");
  const double dz = effective_length(link);
  const double step_var = noise.sigmad_sq * dz;
  const auto [nx, sum_x] = walk(s.x, link.segments, step_var, rng);
  PolSample linear{s.x + nx, {}};
  double phi_y = 0.0;
  if (multiplex == Multiplex::dual) {
    const auto [ny, sum_y] = walk(s.y, link.segments, step_var, rng);
    linear.y = s.y + ny;
    phi_y = link.gamma * dz * sum_y;
  }
  return finish(linear, link.gamma * dz * sum_x, phi_y, amplitude_normalizer(link, noise),
                kerr_sign);
}

ChannelDraw propagate_distributed(const PolSample& s, const LinkConfig& link,
                                  const NoiseSpec& noise, const WienerBridgeSampler& sampler,
                                  RngStream& rng, Multiplex multiplex, double kerr_sign) {
  require(link.amplification == Amplification::distributed, Errc::wrong_amplification_kind,
          "propagate_distributed requires a distributed link");
  require(sampler.steps() == link.segments, Errc::invalid_parameter,
          "bridge sampler step count does not match the link");
  const double dz = effective_length(link);
  const double step_var = noise.sigmad_sq * dz;
  const auto px = sampler.sample(s.x, step_var, rng);
  PolSample linear{s.x + px.endpoint, {}};
  double phi_y = 0.0;
  if (multiplex == Multiplex::dual) {
    const auto py = sampler.sample(s.y, step_var, rng);
    linear.y = s.y + py.endpoint;
    phi_y = link.gamma * dz * py.power_sum;
  }
  return finish(linear, link.gamma * dz * px.power_sum, phi_y, amplitude_normalizer(link, noise),
                kerr_sign);
}

Channel::Channel(LinkConfig link, ChannelOptions options)
    : Channel(link, noise_spec(link), options) {}

Channel::Channel(LinkConfig link, NoiseSpec noise, ChannelOptions options)
    : link_(link), noise_(noise), options_(options) {
  link_.validate();
  amplitude_scale_ = amplitude_normalizer(link_, noise_);
  if (link_.amplification == Amplification::distributed &&
      options_.method == DistributedMethod::bridge)
    bridge_.emplace_back(link_.segments, options_.bridge_modes);
}

ChannelDraw Channel::operator()(const PolSample& s, RngStream& rng) const {
  if (link_.amplification == Amplification::lumped)
    return propagate_lumped(s, link_, noise_, rng, options_.multiplex, options_.kerr_sign);
  if (!bridge_.empty())
    return propagate_distributed(s, link_, noise_, bridge_.front(), rng, options_.multiplex,
                                 options_.kerr_sign);
  return propagate_distributed(s, link_, noise_, rng, options_.multiplex, options_.kerr_sign);
}

std::vector<ChannelDraw> draw_batch(std::span<const PolSample> symbols, const Channel& channel,
                                    StreamKey key, std::uint64_t first_index) {
  std::vector<ChannelDraw> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    RngStream rng(key, first_index + i);
    out.push_back(channel(symbols[i], rng));
  }
  return out;
}

}  // namespace nlpn
