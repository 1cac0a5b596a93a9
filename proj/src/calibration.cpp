#include "nlpn/calibration.hpp"

#include <cmath>

#include "nlpn/error.hpp"
#include "nlpn/parallel.hpp"

namespace nlpn {

PolSample random_symbol(const Constellation& c, RngStream& rng, Multiplex multiplex) {
  PolSample s{c[static_cast<std::size_t>(rng.uniform_int(c.order()))], {}};
  if (multiplex == Multiplex::dual) s.y = c[static_cast<std::size_t>(rng.uniform_int(c.order()))];
  return s;
}

namespace {

struct CfBundle {
  ConditionalCF own_x;
  std::optional<ConditionalCF> own_y, joint_x, joint_y;

  void merge(const CfBundle& o) {
    own_x.merge(o.own_x);
    if (own_y) {
      own_y->merge(*o.own_y);
      joint_x->merge(*o.joint_x);
      joint_y->merge(*o.joint_y);
    }
  }
};

}  // namespace

namespace {

struct Grids {
  AmplitudeGrid one;
  AmplitudeGrid two;
  AmplitudeGrid density;
};

Grids grids_for(double power_w, double scale, const CalibrationOptions& options) {
  const double rho = power_w / (scale * scale);
  return {AmplitudeGrid::for_snr(rho, options.bins_1d), AmplitudeGrid::for_snr(rho, options.bins_2d),
          AmplitudeGrid::for_snr(rho, options.density_amplitude_bins)};
}

CfBundle empty_bundle(const Grids& g, bool dual, int order) {
  CfBundle b{ConditionalCF(g.one, order), {}, {}, {}};
  if (dual) {
    b.own_y.emplace(g.one, order);
    b.joint_x.emplace(g.two, g.two, order);
    b.joint_y.emplace(g.two, g.two, order);
  }
  return b;
}

void add_sample(CfBundle& b, const PolSample& sent, const PolSample& received, double rx,
                double ry) {
  const auto ux = residual_phasor(received.x, sent.x);
  b.own_x.add_unit(ux, rx);
  if (b.own_y) {
    const auto uy = residual_phasor(received.y, sent.y);
    b.own_y->add_unit(uy, ry);
    const int flat = b.joint_x->flat_bin(rx, ry);
    b.joint_x->add_unit_to_bin(flat, ux);
    b.joint_y->add_unit_to_bin(flat, uy);
  }
}

Calibration from_bundle(CfBundle&& total, int order, double power_w, double scale,
                        Multiplex multiplex, const CalibrationOptions& options) {
  Calibration cal;
  cal.order = order;
  cal.power_w = power_w;
  cal.amplitude_scale = scale;
  cal.multiplex = multiplex;
  cal.map_x = rotation_map_sp(total.own_x, scale, options.min_count);
  cal.cf_x = std::move(total.own_x);
  if (total.own_y) {
    cal.map_y = rotation_map_sp(*total.own_y, scale, options.min_count);
    cal.map2d_x = rotation_map_pm(*total.joint_x, scale, options.min_count);
    cal.map2d_y = rotation_map_pm(*total.joint_y, scale, options.min_count);
    cal.cf_y = std::move(total.own_y);
    cal.cf2d_x = std::move(total.joint_x);
    cal.cf2d_y = std::move(total.joint_y);
  }
  return cal;
}

JointDensity empty_density(const Calibration& cal, const Grids& g,
                           const CalibrationOptions& options) {
  return options.density_shear ? JointDensity(g.density, g.density, options.density_phase_bins,
                                              cal.map2d_x, cal.map2d_y)
                               : JointDensity(g.density, g.density, options.density_phase_bins);
}

void add_density(JointDensity& density, double tx, double ty, double rx, double ry,
                 const CalibrationOptions& options) {
  density.add(tx, ty, rx, ry);
  if (options.density_symmetrize) density.add(ty, tx, ry, rx);
}

}  // namespace

Calibration calibrate(const Channel& channel, double power_w, int order,
                      const CalibrationOptions& options, StreamKey key, int threads) {
  require(options.draws > 0, Errc::invalid_parameter, "calibration needs at least one draw");
  const Constellation constellation = make_mpsk(order, power_w);
  const bool dual = channel.multiplex() == Multiplex::dual;
  const double scale = channel.amplitude_scale();
  const Grids grids = grids_for(power_w, scale, options);

  const ChunkPlan plan{options.draws, options.chunk};
  CfBundle total = empty_bundle(grids, dual, options.order);
  ordered_chunks<CfBundle>(
      plan.chunks(), threads,
      [&](std::uint64_t c) {
        CfBundle b = empty_bundle(grids, dual, options.order);
        for (std::uint64_t i = plan.begin(c); i < plan.end(c); ++i) {
          RngStream rng(key, i);
          const PolSample s = random_symbol(constellation, rng, channel.multiplex());
          const ChannelDraw d = channel(s, rng);
          add_sample(b, s, d.received, d.r_x, d.r_y);
        }
        return b;
      },
      [&](CfBundle&& b) {
        total.merge(b);
        return true;
      });

  Calibration cal = from_bundle(std::move(total), order, power_w, scale, channel.multiplex(), options);

  if (dual && options.build_density) {
    JointDensity density = empty_density(cal, grids, options);
    // Second pass over the same substreams; the density needs the maps first.
    struct Sample {
      double tx, ty, rx, ry;
    };
    ordered_chunks<std::vector<Sample>>(
        plan.chunks(), threads,
        [&](std::uint64_t c) {
          std::vector<Sample> out;
          out.reserve(plan.end(c) - plan.begin(c));
          for (std::uint64_t i = plan.begin(c); i < plan.end(c); ++i) {
            RngStream rng(key, i);
            const PolSample s = random_symbol(constellation, rng, channel.multiplex());
            const ChannelDraw d = channel(s, rng);
            out.push_back({std::arg(residual_phasor(d.received.x, s.x)),
                           std::arg(residual_phasor(d.received.y, s.y)), d.r_x, d.r_y});
          }
          return out;
        },
        [&](std::vector<Sample>&& samples) {
          for (const auto& s : samples) add_density(density, s.tx, s.ty, s.rx, s.ry, options);
          return true;
        });
    cal.density = std::move(density);
  }
  return cal;
}

Calibration calibrate_from_samples(std::span<const PolSample> sent,
                                   std::span<const PolSample> received, double power_w,
                                   double amplitude_scale, int order, Multiplex multiplex,
                                   const CalibrationOptions& options) {
  require(!sent.empty() && sent.size() == received.size(), Errc::invalid_parameter,
          "calibration needs matching, nonempty sent and received sequences");
  require(amplitude_scale > 0.0, Errc::invalid_parameter, "amplitude scale must be positive");
  const bool dual = multiplex == Multiplex::dual;
  const Grids grids = grids_for(power_w, amplitude_scale, options);
  CfBundle total = empty_bundle(grids, dual, options.order);
  for (std::size_t i = 0; i < sent.size(); ++i)
    add_sample(total, sent[i], received[i], std::abs(received[i].x) / amplitude_scale,
               std::abs(received[i].y) / amplitude_scale);
  Calibration cal = from_bundle(std::move(total), order, power_w, amplitude_scale, multiplex, options);
  if (dual && options.build_density) {
    JointDensity density = empty_density(cal, grids, options);
    for (std::size_t i = 0; i < sent.size(); ++i)
      add_density(density, std::arg(residual_phasor(received[i].x, sent[i].x)),
                  std::arg(residual_phasor(received[i].y, sent[i].y)),
                  std::abs(received[i].x) / amplitude_scale,
                  std::abs(received[i].y) / amplitude_scale, options);
    cal.density = std::move(density);
  }
  return cal;
}

}  // namespace nlpn
