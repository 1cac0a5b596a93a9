#ifndef NLPN_RNG_HPP
#define NLPN_RNG_HPP

#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string_view>

namespace nlpn {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, used to turn purpose labels into stream identifiers.
inline constexpr std::uint64_t stream_id(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Identifies one independent substream family: a master seed plus a stream id.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  StreamKey derive(std::uint64_t sub) const noexcept {
    return {seed, splitmix64(stream ^ splitmix64(sub + 0x632be59bd9b4e019ULL))};
  }
  StreamKey derive(std::string_view label) const noexcept { return derive(stream_id(label)); }
};

/// Counter-addressed generator: the state is a pure function of
/// (seed, stream, counter), so draw i of a batch is reproducible no matter how
/// the batch is chunked or which worker evaluates it. The bit source is
/// xoshiro256++.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(StreamKey key, std::uint64_t counter) noexcept {
    std::uint64_t x = splitmix64(key.seed) ^ splitmix64(key.stream + 0x2545f4914f6cdd1dULL) ^
                      splitmix64(counter * 0xd1342543de82ef95ULL + 0x5851f42d4c957f2dULL);
    for (auto& s : s_) {
      x = splitmix64(x);
      s = x;
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

  /// Circular complex Gaussian with total variance `variance` (half per quadrature).
  std::complex<double> complex_normal(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

  int uniform_int(int n) noexcept { return static_cast<int>(uniform() * n); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
  boost::random::normal_distribution<double> normal_{};
};

}  // namespace nlpn

#endif  // NLPN_RNG_HPP
