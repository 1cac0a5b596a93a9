#include "nlpn/model.hpp"

#include <string>

#include "nlpn/error.hpp"

namespace nlpn {

Constellation::Constellation(int order, double energy) : order_(order), energy_(energy) {
  require(order >= 2, Errc::invalid_parameter, "constellation order must be >= 2");
  require(energy > 0.0 && std::isfinite(energy), Errc::invalid_parameter,
          "symbol energy must be positive");
  const double radius = std::sqrt(energy);
  points_.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) points_.push_back(std::polar(radius, phase(k)));
}

Constellation make_mpsk(int order, double energy) { return Constellation(order, energy); }

void LinkConfig::validate() const {
  require(length_km > 0.0, Errc::invalid_parameter, "link length must be positive");
  require(gamma >= 0.0, Errc::invalid_parameter, "nonlinear coefficient must be >= 0");
  require(bandwidth_hz > 0.0, Errc::invalid_parameter, "optical bandwidth must be positive");
  require(segments >= 1, Errc::invalid_parameter, "span/step count must be >= 1");
  require(alpha_db_per_km >= 0.0, Errc::invalid_parameter, "attenuation must be >= 0");
  require(carrier_hz > 0.0, Errc::invalid_parameter, "carrier frequency must be positive");
}

LinkConfig reference_distributed_link() { return LinkConfig{}; }

LinkConfig reference_lumped_link() {
  LinkConfig link;
  link.amplification = Amplification::lumped;
  link.segments = 45;
  link.length_km = 45 * 90.0;
  return link;
}

double effective_length(const LinkConfig& link) {
  link.validate();
  const double span = link.segment_length_km();
  if (link.amplification == Amplification::distributed) return span;
  const double a = link.alpha();
  // (1 - exp(-a l)) / a, written with expm1 so the a -> 0 limit is exact
  if (a * span < 1e-12) return span;
  return -std::expm1(-a * span) / a;
}

double spontaneous_emission_factor(const LinkConfig& link) {
  return db_to_linear(link.noise_figure_db) / 2.0;
}

NoiseSpec noise_spec(const LinkConfig& link) {
  link.validate();
  NoiseSpec spec;
  spec.sigmad_sq = 2.0 * constants::planck * link.carrier_hz * link.bandwidth_hz * link.alpha() *
                   spontaneous_emission_factor(link);
  if (link.amplification == Amplification::lumped)
    spec.sigma0_sq = spec.sigmad_sq * link.length_km / link.segments;
  return spec;
}

double total_noise_variance(const LinkConfig& link, const NoiseSpec& noise) {
  if (link.amplification == Amplification::distributed) return link.length_km * noise.sigmad_sq;
  return link.segments * noise.sigma0_sq;
}

SnrPoint snr_from_power(double power_w, const LinkConfig& link, const NoiseSpec& noise) {
  require(power_w >= 0.0, Errc::invalid_parameter, "launch power must be >= 0");
  const double total = total_noise_variance(link, noise);
  require(total > 0.0, Errc::invalid_parameter, "noise variance must be positive");
  const double rho = power_w / total;
  return {rho, rho};
}

}  // namespace nlpn
