#ifndef NLPN_CIRCULAR_HPP
#define NLPN_CIRCULAR_HPP

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>

#include "nlpn/error.hpp"

namespace nlpn {

/// Wraps an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_phase(Scalar theta) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  if (theta > -pi && theta <= pi) return theta;
  Scalar t = std::fmod(theta + pi, two_pi);
  if (t <= 0) t += two_pi;
  return t - pi;
}

/// Running first and second trigonometric moments of a set of angles.
class CircularMoments {
 public:
  void add(double theta) { add_unit(std::polar(1.0, theta)); }
  void add_unit(std::complex<double> u) {
    m1_ += u;
    m2_ += u * u;
    ++n_;
  }
  void merge(const CircularMoments& o) {
    m1_ += o.m1_;
    m2_ += o.m2_;
    n_ += o.n_;
  }

  std::uint64_t count() const noexcept { return n_; }
  std::complex<double> first() const noexcept { return m1_; }
  std::complex<double> mean_resultant() const { return m1_ / static_cast<double>(n_); }
  double resultant_length() const { return std::abs(mean_resultant()); }
  double mean_direction() const { return std::arg(m1_); }
  double variance() const { return 1.0 - resultant_length(); }

  /// Standard error of the mean direction (large-sample, no symmetry assumed):
  /// sqrt((1 - R2) / (2 n R^2)).
  double standard_error() const {
    const double r1 = resultant_length();
    const double r2 = std::abs(m2_ / static_cast<double>(n_));
    return std::sqrt((1.0 - r2) / (2.0 * static_cast<double>(n_) * r1 * r1));
  }

 private:
  std::complex<double> m1_{};
  std::complex<double> m2_{};
  std::uint64_t n_ = 0;
};

template <typename Derived>
CircularMoments circular_moments(const Eigen::DenseBase<Derived>& phases) {
  CircularMoments m;
  for (Eigen::Index i = 0; i < phases.size(); ++i) m.add(static_cast<double>(phases.derived()(i)));
  return m;
}

/// 1 - |mean of exp(j theta)|, in [0, 1].
template <typename Derived>
double circular_variance(const Eigen::DenseBase<Derived>& phases) {
  require(phases.size() > 0, Errc::undefined_input, "circular variance of an empty set");
  return circular_moments(phases).variance();
}

inline double circular_variance(std::span<const double> phases) {
  return circular_variance(
      Eigen::Map<const Eigen::ArrayXd>(phases.data(), static_cast<Eigen::Index>(phases.size())));
}

/// Circular mean direction in (-pi, pi].
template <typename Derived>
double circular_mean(const Eigen::DenseBase<Derived>& phases) {
  require(phases.size() > 0, Errc::undefined_input, "circular mean of an empty set");
  return circular_moments(phases).mean_direction();
}

}  // namespace nlpn

#endif  // NLPN_CIRCULAR_HPP
