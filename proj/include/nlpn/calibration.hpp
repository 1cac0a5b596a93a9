#ifndef NLPN_CALIBRATION_HPP
#define NLPN_CALIBRATION_HPP

#include <cstdint>
#include <span>

#include "nlpn/channel.hpp"
#include "nlpn/detectors.hpp"
#include "nlpn/rng.hpp"

namespace nlpn {

struct CalibrationOptions {
  std::uint64_t draws = 10'000'000;
  int order = 16;
  int bins_1d = 200;
  int bins_2d = 64;
  std::uint64_t min_count = default_min_count;
  bool build_density = true;
  int density_phase_bins = 64;
  int density_amplitude_bins = 32;
  bool density_shear = true;
  /// Also add each sample with the polarizations swapped (the channel is
  /// symmetric under x <-> y when both carry equal power).
  bool density_symmetrize = true;
  std::uint64_t chunk = 1 << 15;
};

/// Uniform random transmitted symbol for draw `index`; consumes the first
/// values of that draw's substream.
PolSample random_symbol(const Constellation& c, RngStream& rng, Multiplex multiplex);

/// Draws calibration samples at launch power `power_w` per polarization and
/// builds every artifact the detectors need: own- and joint-amplitude CFs,
/// their rotation maps and (dual polarization) the joint density grid.
Calibration calibrate(const Channel& channel, double power_w, int order,
                      const CalibrationOptions& options, StreamKey key, int threads = 1);

/// Same artifacts from recorded (sent, received) pairs, e.g. training
/// waveforms through a split-step link. `options.draws` is ignored.
Calibration calibrate_from_samples(std::span<const PolSample> sent,
                                   std::span<const PolSample> received, double power_w,
                                   double amplitude_scale, int order, Multiplex multiplex,
                                   const CalibrationOptions& options);

}  // namespace nlpn

#endif  // NLPN_CALIBRATION_HPP
