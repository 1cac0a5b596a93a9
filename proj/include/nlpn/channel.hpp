#ifndef NLPN_CHANNEL_HPP
#define NLPN_CHANNEL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "nlpn/model.hpp"
#include "nlpn/rng.hpp"

namespace nlpn {

enum class Multiplex { single, dual };

/// One use of the memoryless channel.
struct ChannelDraw {
  PolSample received;     // E
  PolSample linear_part;  // S + accumulated noise
  double phi_x = 0.0;
  double phi_y = 0.0;
  double phi_nl = 0.0;    // phi_x + phi_y
  double r_x = 0.0;       // |E_x| / sqrt(total noise variance)
  double r_y = 0.0;
};

/// Samples the two statistics of an N-step complex Gaussian random walk W_1..W_N
/// that the channel needs: the endpoint W_N and sum_i |S + W_i|^2.
///
/// The walk is split into its endpoint and an independent discrete Brownian
/// bridge; the bridge is expanded in the sine eigenbasis of its covariance
/// min(i,j) - ij/N. The leading `modes` terms are sampled exactly. The
/// remaining modes enter through their exact Gaussian contribution to the two
/// linear functionals and a moment-matched Gaussian for their quadratic part.
/// With modes = N - 1 the result is exact in distribution.
class WienerBridgeSampler {
 public:
  WienerBridgeSampler(int steps, int modes);

  struct PathStats {
    cplx endpoint;
    double power_sum;
  };

  PathStats sample(cplx signal, double step_variance, RngStream& rng) const;

  int steps() const noexcept { return steps_; }
  int modes() const noexcept { return static_cast<int>(weight_g_.size()); }

 private:
  int steps_;
  std::vector<double> eigen_;     // mu_k, k = 1..K
  std::vector<double> weight_g_;  // sqrt(mu_k) * sum_i v_k(i)
  std::vector<double> weight_h_;  // sqrt(mu_k) * sum_i i v_k(i)
  // Tail (k > K) second moments.
  double tail_gg_ = 0.0;
  double tail_hh_ = 0.0;
  double tail_gh_ = 0.0;
  double tail_mean_ = 0.0;
  double tail_sd_ = 0.0;
};

enum class DistributedMethod { random_walk, bridge };

struct ChannelOptions {
  Multiplex multiplex = Multiplex::dual;
  DistributedMethod method = DistributedMethod::bridge;
  int bridge_modes = 48;
  /// Sign of the terminal Kerr rotation: E = E_lin * exp(j * sign * phi_NL).
  double kerr_sign = -1.0;
};

ChannelDraw propagate_lumped(const PolSample& s, const LinkConfig& link, const NoiseSpec& noise,
                             RngStream& rng, Multiplex multiplex = Multiplex::dual,
                             double kerr_sign = -1.0);

/// Literal N_steps random-walk discretization of the distributed link.
ChannelDraw propagate_distributed(const PolSample& s, const LinkConfig& link,
                                  const NoiseSpec& noise, RngStream& rng,
                                  Multiplex multiplex = Multiplex::dual, double kerr_sign = -1.0);

/// Distributed link through a precomputed bridge sampler.
ChannelDraw propagate_distributed(const PolSample& s, const LinkConfig& link,
                                  const NoiseSpec& noise, const WienerBridgeSampler& sampler,
                                  RngStream& rng, Multiplex multiplex = Multiplex::dual,
                                  double kerr_sign = -1.0);

/// A link, its noise and a sampling method bundled as a callable.
class Channel {
 public:
  explicit Channel(LinkConfig link, ChannelOptions options = {});
  Channel(LinkConfig link, NoiseSpec noise, ChannelOptions options = {});

  const LinkConfig& link() const noexcept { return link_; }
  const NoiseSpec& noise() const noexcept { return noise_; }
  const ChannelOptions& options() const noexcept { return options_; }
  Multiplex multiplex() const noexcept { return options_.multiplex; }
  /// sqrt(L sigma_d^2) or sqrt(N sigma_0^2); the normalizer of received amplitudes.
  double amplitude_scale() const noexcept { return amplitude_scale_; }

  ChannelDraw operator()(const PolSample& s, RngStream& rng) const;

 private:
  LinkConfig link_;
  NoiseSpec noise_;
  ChannelOptions options_;
  double amplitude_scale_;
  std::vector<WienerBridgeSampler> bridge_;  // empty unless distributed + bridge
};

/// Draw i of the batch uses substream (key, first_index + i).
std::vector<ChannelDraw> draw_batch(std::span<const PolSample> symbols, const Channel& channel,
                                    StreamKey key, std::uint64_t first_index = 0);

}  // namespace nlpn

#endif  // NLPN_CHANNEL_HPP
