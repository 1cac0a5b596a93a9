#include "nlpn/stats.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nlpn/circular.hpp"
#include "nlpn/error.hpp"

namespace nlpn {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace

// ---------------------------------------------------------------- AmplitudeGrid

AmplitudeGrid::AmplitudeGrid(std::vector<double> edges) : edges_(std::move(edges)) {
  require(edges_.size() >= 2, Errc::invalid_parameter, "amplitude grid needs >= 1 bin");
  require(edges_.front() == 0.0, Errc::invalid_parameter, "amplitude grid must start at 0");
  for (std::size_t i = 1; i < edges_.size(); ++i)
    require(edges_[i] > edges_[i - 1], Errc::invalid_parameter,
            "amplitude grid edges must be strictly increasing");
  const double width = edges_[1] - edges_[0];
  bool uniform = true;
  for (std::size_t i = 1; i < edges_.size() && uniform; ++i)
    uniform = std::abs((edges_[i] - edges_[i - 1]) - width) <= 1e-12 * width;
  if (uniform) inv_width_ = 1.0 / width;
}

AmplitudeGrid AmplitudeGrid::uniform(int bins, double max_r) {
  require(bins >= 1 && max_r > 0.0, Errc::invalid_parameter, "invalid uniform amplitude grid");
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) edges[i] = max_r * i / bins;
  return AmplitudeGrid(std::move(edges));
}

AmplitudeGrid AmplitudeGrid::for_snr(double rho, int bins) {
  return uniform(bins, std::sqrt(std::max(rho, 0.0)) + 6.0);
}

int AmplitudeGrid::bin(double r) const noexcept {
  const int last = bins() - 1;
  if (!(r > 0.0)) return 0;
  if (inv_width_ > 0.0) {
    const double b = r * inv_width_;
    return b >= last ? last : static_cast<int>(b);
  }
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), r);
  return std::min(static_cast<int>(it - edges_.begin()) - 1, last);
}

// ---------------------------------------------------------------- ConditionalCF

ConditionalCF::ConditionalCF(AmplitudeGrid grid, int order)
    : grid_x_(std::move(grid)), order_(order) {
  require(order >= 1, Errc::invalid_parameter, "CF order must be >= 1");
  sums_ = Eigen::ArrayXXcd::Zero(order_, grid_x_.bins());
  counts_.assign(static_cast<std::size_t>(grid_x_.bins()), 0);
}

ConditionalCF::ConditionalCF(AmplitudeGrid grid_x, AmplitudeGrid grid_y, int order)
    : grid_x_(std::move(grid_x)), grid_y_(std::move(grid_y)), order_(order) {
  require(order >= 1, Errc::invalid_parameter, "CF order must be >= 1");
  const int n = grid_x_.bins() * grid_y_->bins();
  sums_ = Eigen::ArrayXXcd::Zero(order_, n);
  counts_.assign(static_cast<std::size_t>(n), 0);
}

int ConditionalCF::flat_bin(double rx, double ry) const noexcept {
  if (!grid_y_) return grid_x_.bin(rx);
  return grid_x_.bin(rx) * grid_y_->bins() + grid_y_->bin(ry);
}

void ConditionalCF::add(double theta, double rx, double ry) {
  add_unit(std::polar(1.0, theta), rx, ry);
}

void ConditionalCF::add_unit(std::complex<double> u, double rx, double ry) {
  add_unit_to_bin(flat_bin(rx, ry), u);
}

void ConditionalCF::add_unit_to_bin(int flat, std::complex<double> u) {
  std::complex<double> p = u;
  for (int k = 0; k < order_; ++k) {
    sums_(k, flat) += p;
    p *= u;
  }
  ++counts_[flat];
  ++total_;
}

ConditionalCF& ConditionalCF::merge(const ConditionalCF& other) {
  require(other.order_ == order_ && other.grid_x_ == grid_x_ && other.grid_y_ == grid_y_,
          Errc::invalid_parameter, "cannot merge CFs with different grids or orders");
  sums_ += other.sums_;
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
  return *this;
}

std::complex<double> ConditionalCF::coefficient(int k, double rx, double ry) const {
  require(k >= 1 && k <= order_, Errc::invalid_parameter, "coefficient order out of range");
  if (total_ == 0) return {};
  return sums_(k - 1, flat_bin(rx, ry)) / static_cast<double>(total_);
}

double ConditionalCF::integrated_magnitude(int k) const {
  require(k >= 1 && k <= order_, Errc::invalid_parameter, "coefficient order out of range");
  if (total_ == 0) return 0.0;
  return sums_.row(k - 1).abs().sum() / static_cast<double>(total_);
}

Eigen::ArrayXd ConditionalCF::coefficients() const {
  Eigen::ArrayXd c(order_);
  for (int k = 1; k <= order_; ++k) c(k - 1) = integrated_magnitude(k);
  return c;
}

Eigen::ArrayXd ConditionalCF::factored_coefficients() const {
  require(dimension() == 2, Errc::invalid_parameter, "factored coefficients need a 2D CF");
  Eigen::ArrayXd c = Eigen::ArrayXd::Zero(order_);
  if (total_ == 0) return c;
  const int nx = grid_x_.bins();
  const int ny = grid_y_->bins();
  for (int k = 0; k < order_; ++k) {
    // Row-major flat index: bx * ny + by.
    Eigen::MatrixXd table(nx, ny);
    for (int bx = 0; bx < nx; ++bx)
      for (int by = 0; by < ny; ++by) table(bx, by) = std::abs(sums_(k, bx * ny + by));
    table /= static_cast<double>(total_);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(table, Eigen::ComputeThinU | Eigen::ComputeThinV);
    c(k) = svd.singularValues()(0) * svd.matrixU().col(0).sum() * svd.matrixV().col(0).sum();
  }
  return c;
}

ConditionalCF ConditionalCF::from_parts(AmplitudeGrid gx, std::optional<AmplitudeGrid> gy,
                                        int order, Eigen::ArrayXXcd sums,
                                        std::vector<std::uint64_t> counts) {
  ConditionalCF cf = gy ? ConditionalCF(std::move(gx), std::move(*gy), order)
                        : ConditionalCF(std::move(gx), order);
  require(sums.rows() == cf.sums_.rows() && sums.cols() == cf.sums_.cols() &&
              counts.size() == cf.counts_.size(),
          Errc::invalid_parameter, "CF parts do not match the grid");
  cf.sums_ = std::move(sums);
  cf.counts_ = std::move(counts);
  cf.total_ = 0;
  for (auto n : cf.counts_) cf.total_ += n;
  return cf;
}

// ---------------------------------------------------------------- accumulation

std::complex<double> residual_phasor(const std::complex<double>& received,
                                     const std::complex<double>& sent) {
  const std::complex<double> z = received * std::conj(sent);
  const double a = std::abs(z);
  return a > 0.0 ? z / a : std::complex<double>(1.0, 0.0);
}

void accumulate(ConditionalCF& cf, std::span<const ChannelDraw> draws,
                std::span<const PolSample> sent, Polarization pol) {
  require(draws.size() == sent.size(), Errc::invalid_parameter,
          "draws and transmitted symbols differ in length");
  const bool joint = cf.dimension() == 2;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& d = draws[i];
    const bool is_x = pol == Polarization::x;
    const auto u = is_x ? residual_phasor(d.received.x, sent[i].x)
                        : residual_phasor(d.received.y, sent[i].y);
    if (joint)
      cf.add_unit(u, d.r_x, d.r_y);
    else
      cf.add_unit(u, is_x ? d.r_x : d.r_y);
  }
}

ConditionalCF accumulate(std::span<const ChannelDraw> draws, std::span<const PolSample> sent,
                         const AmplitudeGrid& grid, int order, Polarization pol) {
  ConditionalCF cf(grid, order);
  accumulate(cf, draws, sent, pol);
  return cf;
}

ConditionalCF accumulate(std::span<const ChannelDraw> draws, std::span<const PolSample> sent,
                         const AmplitudeGrid& grid_x, const AmplitudeGrid& grid_y, int order,
                         Polarization pol) {
  ConditionalCF cf(grid_x, grid_y, order);
  accumulate(cf, draws, sent, pol);
  return cf;
}

// ---------------------------------------------------------------- RotationMap

RotationMap::RotationMap(AmplitudeGrid grid_x, std::optional<AmplitudeGrid> grid_y,
                         Eigen::ArrayXd theta, std::vector<bool> usable, double amplitude_scale)
    : grid_x_(std::move(grid_x)),
      grid_y_(std::move(grid_y)),
      theta_(std::move(theta)),
      usable_(std::move(usable)),
      amplitude_scale_(amplitude_scale) {
  const int ny = grid_y_ ? grid_y_->bins() : 1;
  const int n = grid_x_.bins() * ny;
  require(theta_.size() == n && static_cast<int>(usable_.size()) == n, Errc::invalid_parameter,
          "rotation map size does not match its grid");
  require(amplitude_scale_ > 0.0, Errc::invalid_parameter, "amplitude scale must be positive");

  std::vector<int> good;
  for (int b = 0; b < n; ++b)
    if (usable_[b]) good.push_back(b);
  require(!good.empty(), Errc::calibration_required, "rotation map has no usable bins");

  auto center = [&](int flat) {
    const int bx = flat / ny;
    const int by = flat % ny;
    return std::pair{grid_x_.center(bx), grid_y_ ? grid_y_->center(by) : 0.0};
  };
  fallback_.resize(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) {
    if (usable_[b]) {
      fallback_[b] = b;
      continue;
    }
    const auto [cx, cy] = center(b);
    double best = std::numeric_limits<double>::infinity();
    int arg = good.front();
    for (int g : good) {
      const auto [gx, gy] = center(g);
      const double d = (gx - cx) * (gx - cx) + (gy - cy) * (gy - cy);
      if (d < best) {
        best = d;
        arg = g;
      }
    }
    fallback_[b] = arg;
  }
}

int RotationMap::flat_bin(double rx, double ry) const noexcept {
  if (!grid_y_) return grid_x_.bin(rx);
  return grid_x_.bin(rx) * grid_y_->bins() + grid_y_->bin(ry);
}

namespace {

RotationMap map_from_cf(const ConditionalCF& cf, double amplitude_scale, std::uint64_t min_count) {
  const int n = cf.bins();
  Eigen::ArrayXd theta = Eigen::ArrayXd::Zero(n);
  std::vector<bool> usable(static_cast<std::size_t>(n), false);
  for (int b = 0; b < n; ++b) {
    if (cf.count(b) < std::max<std::uint64_t>(min_count, 1)) continue;
    usable[b] = true;
    theta(b) = wrap_phase(-std::arg(cf.moment(1, b)));
  }
  return RotationMap(cf.grid_x(), cf.grid_y(), std::move(theta), std::move(usable),
                     amplitude_scale);
}

}  // namespace

RotationMap rotation_map_sp(const ConditionalCF& cf, double amplitude_scale,
                            std::uint64_t min_count) {
  require(cf.dimension() == 1, Errc::invalid_parameter, "single-amplitude map needs a 1D CF");
  return map_from_cf(cf, amplitude_scale, min_count);
}

RotationMap rotation_map_pm(const ConditionalCF& cf2d, double amplitude_scale,
                            std::uint64_t min_count) {
  require(cf2d.dimension() == 2, Errc::invalid_parameter, "joint-amplitude map needs a 2D CF");
  return map_from_cf(cf2d, amplitude_scale, min_count);
}

// ---------------------------------------------------------------- PhasePdf

PhasePdf::PhasePdf(Eigen::ArrayXd coefficients) : coef_(std::move(coefficients)) {
  constexpr int grid = 4096;
  double integral = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double v = raw(-std::numbers::pi + two_pi * (i + 0.5) / grid);
    if (v < 0.0) clipped_ = true;
    integral += std::max(v, 0.0);
  }
  if (clipped_) normalization_ = integral * two_pi / grid;
}

double PhasePdf::raw(double theta) const {
  double v = 1.0 / two_pi;
  for (Eigen::Index k = 0; k < coef_.size(); ++k)
    v += coef_(k) * std::cos(static_cast<double>(k + 1) * theta) / std::numbers::pi;
  return v;
}

double PhasePdf::operator()(double theta) const {
  const double v = raw(theta);
  if (!clipped_) return v;
  return std::max(v, 0.0) / normalization_;
}

double PhasePdf::central_mass(double half_width) const {
  if (!clipped_) {
    double mass = half_width / std::numbers::pi;
    for (Eigen::Index k = 0; k < coef_.size(); ++k) {
      const double kk = static_cast<double>(k + 1);
      mass += 2.0 * coef_(k) * std::sin(kk * half_width) / (kk * std::numbers::pi);
    }
    return mass;
  }
  constexpr int steps = 8192;  // midpoint rule
  const double h = 2.0 * half_width / steps;
  double mass = 0.0;
  for (int i = 0; i < steps; ++i) mass += (*this)(-half_width + (i + 0.5) * h);
  return mass * h;
}

PhasePdf phase_pdf_series(const CoefficientSource& cf, int order) {
  require(order >= 0, Errc::invalid_parameter, "series order must be >= 0");
  const int k = std::min(order, cf.order());
  Eigen::ArrayXd c(k);
  for (int i = 1; i <= k; ++i) c(i - 1) = cf.integrated_magnitude(i);
  return PhasePdf(std::move(c));
}

// ---------------------------------------------------------------- JointDensity

JointDensity::JointDensity(AmplitudeGrid grid_x, AmplitudeGrid grid_y, int phase_bins,
                           std::optional<RotationMap> shear_x, std::optional<RotationMap> shear_y)
    : grid_x_(std::move(grid_x)),
      grid_y_(std::move(grid_y)),
      phase_bins_(phase_bins),
      shear_x_(std::move(shear_x)),
      shear_y_(std::move(shear_y)) {
  require(phase_bins_ >= 2, Errc::invalid_parameter, "density needs >= 2 phase bins");
  require(shear_x_.has_value() == shear_y_.has_value(), Errc::invalid_parameter,
          "shear maps must be given for both polarizations or neither");
  const std::size_t n = static_cast<std::size_t>(grid_x_.bins()) * grid_y_.bins() *
                        phase_bins_ * phase_bins_;
  counts_.assign(n, 0);
}

int JointDensity::phase_index(double theta) const noexcept {
  const double t = (wrap_phase(theta) + std::numbers::pi) / two_pi * phase_bins_;
  const int i = static_cast<int>(t);
  return std::clamp(i, 0, phase_bins_ - 1);
}

JointDensity::Cell JointDensity::locate(double rx, double ry) const {
  const std::size_t amp = static_cast<std::size_t>(grid_x_.bin(rx)) * grid_y_.bins() +
                          static_cast<std::size_t>(grid_y_.bin(ry));
  Cell c{amp * phase_bins_ * phase_bins_, 0.0, 0.0};
  if (shear_x_) {
    c.shift_x = shear_x_->angle(rx, ry);
    c.shift_y = shear_y_->angle(rx, ry);
  }
  return c;
}

std::uint32_t JointDensity::count_at(const Cell& cell, double theta_x, double theta_y) const {
  const int px = phase_index(theta_x + cell.shift_x);
  const int py = phase_index(theta_y + cell.shift_y);
  return counts_[cell.amplitude_offset + static_cast<std::size_t>(px) * phase_bins_ + py];
}

void JointDensity::add(double theta_x, double theta_y, double rx, double ry) {
  const Cell cell = locate(rx, ry);
  const int px = phase_index(theta_x + cell.shift_x);
  const int py = phase_index(theta_y + cell.shift_y);
  ++counts_[cell.amplitude_offset + static_cast<std::size_t>(px) * phase_bins_ + py];
  ++total_;
}

JointDensity& JointDensity::merge(const JointDensity& other) {
  require(other.grid_x_ == grid_x_ && other.grid_y_ == grid_y_ &&
              other.phase_bins_ == phase_bins_,
          Errc::invalid_parameter, "cannot merge densities with different grids");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
  return *this;
}

double JointDensity::mass(double theta_x, double theta_y, double rx, double ry) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(count_at(locate(rx, ry), theta_x, theta_y)) /
         static_cast<double>(total_);
}

JointDensity JointDensity::from_parts(AmplitudeGrid gx, AmplitudeGrid gy, int phase_bins,
                                      std::optional<RotationMap> sx,
                                      std::optional<RotationMap> sy,
                                      std::vector<std::uint32_t> counts) {
  JointDensity d(std::move(gx), std::move(gy), phase_bins, std::move(sx), std::move(sy));
  require(counts.size() == d.counts_.size(), Errc::invalid_parameter,
          "density counts do not match the grid");
  d.counts_ = std::move(counts);
  d.total_ = 0;
  for (auto c : d.counts_) d.total_ += c;
  return d;
}

JointDensity joint_density_grid(std::span<const ChannelDraw> draws,
                                std::span<const PolSample> sent, int phase_bins,
                                const AmplitudeGrid& grid_x, const AmplitudeGrid& grid_y,
                                std::optional<RotationMap> shear_x,
                                std::optional<RotationMap> shear_y) {
  require(draws.size() == sent.size(), Errc::invalid_parameter,
          "draws and transmitted symbols differ in length");
  JointDensity density(grid_x, grid_y, phase_bins, std::move(shear_x), std::move(shear_y));
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& d = draws[i];
    density.add(std::arg(residual_phasor(d.received.x, sent[i].x)),
                std::arg(residual_phasor(d.received.y, sent[i].y)), d.r_x, d.r_y);
  }
  return density;
}

}  // namespace nlpn
