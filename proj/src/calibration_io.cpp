#include "nlpn/calibration_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "nlpn/error.hpp"

namespace nlpn {

namespace fs = std::filesystem;

namespace {

constexpr char magic[8] = {'N', 'L', 'P', 'N', 'C', 'A', 'L', '\0'};
constexpr std::uint32_t version = 1;

enum class Artifact : std::uint32_t { map1d_x = 1, map1d_y = 2, map2d = 3, density = 4 };

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }

  void save(const fs::path& path) const {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    require(static_cast<bool>(os), Errc::io_error, "cannot write " + path.string());
  }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), Errc::calibration_required,
            "calibration file " + path.string() + " not found");
    bytes_.assign(std::istreambuf_iterator<char>(is), {});
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  /// A count that must fit in what is left of the file at `unit` bytes each.
  std::size_t length(std::size_t unit) {
    const std::uint64_t n = u64();
    require(unit == 0 || n <= (bytes_.size() - pos_) / unit, Errc::io_error, corrupt());
    return static_cast<std::size_t>(n);
  }
  void finish() const { require(pos_ == bytes_.size(), Errc::io_error, corrupt()); }
  std::string corrupt() const { return "calibration file " + path_.string() + " is corrupt"; }

 private:
  void need(std::size_t n) const {
    require(bytes_.size() - pos_ >= n, Errc::io_error, corrupt());
  }

  fs::path path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

// Fields every file starts with.
struct Preamble {
  Artifact artifact;
  CalibrationHeader header;
  std::int32_t order;
  double power_w;
  double amplitude_scale;
  Multiplex multiplex;
};

void write_preamble(Writer& w, const Preamble& p) {
  w.raw(magic, sizeof magic);
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(p.artifact));
  w.u32(static_cast<std::uint32_t>(p.header.scenario));
  w.f64(p.header.p_t_dbm);
  w.u64(p.header.seed);
  w.u64(p.header.draws);
  w.i32(p.order);
  w.f64(p.power_w);
  w.f64(p.amplitude_scale);
  w.u32(static_cast<std::uint32_t>(p.multiplex));
}

Preamble read_preamble(Reader& r, Artifact expected_artifact, const CalibrationHeader& expect,
                       const fs::path& path) {
  require(r.raw(sizeof magic) == std::string(magic, sizeof magic), Errc::io_error,
          path.string() + " is not a calibration file");
  const std::uint32_t v = r.u32();
  require(v == version, Errc::io_error,
          path.string() + ": unsupported calibration format version " + std::to_string(v));
  Preamble p;
  p.artifact = static_cast<Artifact>(r.u32());
  require(p.artifact == expected_artifact, Errc::io_error,
          path.string() + " holds a different artifact");
  const std::uint32_t scenario = r.u32();
  require(scenario <= static_cast<std::uint32_t>(ScenarioKind::sp_same_data_rate), Errc::io_error,
          r.corrupt());
  p.header.scenario = static_cast<ScenarioKind>(scenario);
  p.header.p_t_dbm = r.f64();
  p.header.seed = r.u64();
  p.header.draws = r.u64();
  p.order = r.i32();
  p.power_w = r.f64();
  p.amplitude_scale = r.f64();
  const std::uint32_t mux = r.u32();
  require(mux <= 1, Errc::io_error, r.corrupt());
  p.multiplex = static_cast<Multiplex>(mux);
  require(p.header.scenario == expect.scenario &&
              std::abs(p.header.p_t_dbm - expect.p_t_dbm) < 1e-9,
          Errc::io_error,
          path.string() + " was calibrated for " + std::string(to_string(p.header.scenario)) +
              " at " + format_number(p.header.p_t_dbm) + " dBm, not " +
              std::string(to_string(expect.scenario)) + " at " + format_number(expect.p_t_dbm) +
              " dBm");
  return p;
}

void write_grid(Writer& w, const AmplitudeGrid& g) {
  w.u64(g.edges().size());
  for (double e : g.edges()) w.f64(e);
}

AmplitudeGrid read_grid(Reader& r) {
  const std::size_t n = r.length(8);
  require(n >= 2, Errc::io_error, r.corrupt());
  std::vector<double> edges(n);
  for (auto& e : edges) e = r.f64();
  return AmplitudeGrid(std::move(edges));
}

void write_grids(Writer& w, const AmplitudeGrid& gx, const std::optional<AmplitudeGrid>& gy) {
  w.u8(gy ? 2 : 1);
  write_grid(w, gx);
  if (gy) write_grid(w, *gy);
}

std::pair<AmplitudeGrid, std::optional<AmplitudeGrid>> read_grids(Reader& r) {
  const std::uint8_t dim = r.u8();
  require(dim == 1 || dim == 2, Errc::io_error, r.corrupt());
  AmplitudeGrid gx = read_grid(r);
  std::optional<AmplitudeGrid> gy;
  if (dim == 2) gy = read_grid(r);
  return {std::move(gx), std::move(gy)};
}

void write_cf(Writer& w, const ConditionalCF& cf) {
  write_grids(w, cf.grid_x(), cf.grid_y());
  w.i32(cf.order());
  w.u64(static_cast<std::uint64_t>(cf.bins()));
  for (int b = 0; b < cf.bins(); ++b) {
    w.u64(cf.count(b));
    for (int k = 1; k <= cf.order(); ++k) {
      w.f64(cf.moment(k, b).real());
      w.f64(cf.moment(k, b).imag());
    }
  }
}

ConditionalCF read_cf(Reader& r) {
  auto [gx, gy] = read_grids(r);
  const int order = r.i32();
  require(order >= 1, Errc::io_error, r.corrupt());
  const std::size_t bins = r.length(8 + 16 * static_cast<std::size_t>(order));
  Eigen::ArrayXXcd sums(order, static_cast<Eigen::Index>(bins));
  std::vector<std::uint64_t> counts(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    counts[b] = r.u64();
    for (int k = 0; k < order; ++k) {
      const double re = r.f64();
      const double im = r.f64();
      sums(k, static_cast<Eigen::Index>(b)) = {re, im};
    }
  }
  return ConditionalCF::from_parts(std::move(gx), std::move(gy), order, std::move(sums),
                                   std::move(counts));
}

void write_map(Writer& w, const RotationMap& m) {
  write_grids(w, m.grid_x(), m.grid_y());
  w.f64(m.amplitude_scale());
  w.u64(static_cast<std::uint64_t>(m.bins()));
  for (int b = 0; b < m.bins(); ++b) {
    w.f64(m.theta(b));
    w.u8(m.usable(b) ? 1 : 0);
  }
}

RotationMap read_map(Reader& r) {
  auto [gx, gy] = read_grids(r);
  const double scale = r.f64();
  const std::size_t bins = r.length(9);
  Eigen::ArrayXd theta(static_cast<Eigen::Index>(bins));
  std::vector<bool> usable(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    theta(static_cast<Eigen::Index>(b)) = r.f64();
    usable[b] = r.u8() != 0;
  }
  return RotationMap(std::move(gx), std::move(gy), std::move(theta), std::move(usable), scale);
}

Preamble preamble_for(Artifact a, const Calibration& cal, const CalibrationHeader& header) {
  return {a, header, cal.order, cal.power_w, cal.amplitude_scale, cal.multiplex};
}

std::string point_name(double p_t_dbm) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%.3fdBm", p_t_dbm);
  return buf;
}

}  // namespace

std::vector<fs::path> CalibrationFiles::expected(Multiplex multiplex, bool with_density) const {
  if (multiplex == Multiplex::single) return {map1d_x};
  std::vector<fs::path> out{map1d_x, map1d_y, map2d};
  if (with_density) out.push_back(density);
  return out;
}

CalibrationFiles calibration_files(const fs::path& dir, ScenarioKind scenario, double p_t_dbm) {
  const fs::path base = dir / std::string(to_string(scenario));
  const std::string stem = point_name(p_t_dbm);
  return {base / (stem + ".map1d_x.bin"), base / (stem + ".map1d_y.bin"),
          base / (stem + ".map2d.bin"), base / (stem + ".density.bin")};
}

void save_calibration(const Calibration& cal, const CalibrationHeader& header,
                      const CalibrationFiles& files) {
  require(cal.cf_x && cal.map_x, Errc::invalid_parameter, "calibration has no 1D map");
  {
    Writer w;
    write_preamble(w, preamble_for(Artifact::map1d_x, cal, header));
    write_cf(w, *cal.cf_x);
    write_map(w, *cal.map_x);
    w.save(files.map1d_x);
  }
  if (cal.multiplex == Multiplex::single) return;
  require(cal.cf_y && cal.map_y && cal.cf2d_x && cal.cf2d_y && cal.map2d_x && cal.map2d_y,
          Errc::invalid_parameter, "dual-polarization calibration is incomplete");
  {
    Writer w;
    write_preamble(w, preamble_for(Artifact::map1d_y, cal, header));
    write_cf(w, *cal.cf_y);
    write_map(w, *cal.map_y);
    w.save(files.map1d_y);
  }
  {
    Writer w;
    write_preamble(w, preamble_for(Artifact::map2d, cal, header));
    write_cf(w, *cal.cf2d_x);
    write_cf(w, *cal.cf2d_y);
    write_map(w, *cal.map2d_x);
    write_map(w, *cal.map2d_y);
    w.save(files.map2d);
  }
  if (cal.density) {
    const JointDensity& d = *cal.density;
    Writer w;
    write_preamble(w, preamble_for(Artifact::density, cal, header));
    write_grid(w, d.grid_x());
    write_grid(w, d.grid_y());
    w.i32(d.phase_bins());
    w.u8(d.sheared() ? 1 : 0);
    if (d.sheared()) {
      write_map(w, *d.shear_x());
      write_map(w, *d.shear_y());
    }
    w.u64(d.counts().size());
    for (std::uint32_t c : d.counts()) w.u32(c);
    w.save(files.density);
  }
}

Calibration load_calibration(const CalibrationFiles& files, Multiplex multiplex,
                             const CalibrationHeader& expect) {
  Calibration cal;
  {
    Reader r(files.map1d_x);
    const Preamble p = read_preamble(r, Artifact::map1d_x, expect, files.map1d_x);
    require(p.multiplex == multiplex, Errc::io_error,
            files.map1d_x.string() + " was calibrated for the other multiplexing");
    cal.order = p.order;
    cal.power_w = p.power_w;
    cal.amplitude_scale = p.amplitude_scale;
    cal.multiplex = p.multiplex;
    cal.cf_x = read_cf(r);
    cal.map_x = read_map(r);
    r.finish();
  }
  if (multiplex == Multiplex::single) return cal;
  {
    Reader r(files.map1d_y);
    read_preamble(r, Artifact::map1d_y, expect, files.map1d_y);
    cal.cf_y = read_cf(r);
    cal.map_y = read_map(r);
    r.finish();
  }
  {
    Reader r(files.map2d);
    read_preamble(r, Artifact::map2d, expect, files.map2d);
    cal.cf2d_x = read_cf(r);
    cal.cf2d_y = read_cf(r);
    cal.map2d_x = read_map(r);
    cal.map2d_y = read_map(r);
    r.finish();
  }
  if (fs::exists(files.density)) {
    Reader r(files.density);
    read_preamble(r, Artifact::density, expect, files.density);
    AmplitudeGrid gx = read_grid(r);
    AmplitudeGrid gy = read_grid(r);
    const int phase_bins = r.i32();
    require(phase_bins >= 1, Errc::io_error, r.corrupt());
    std::optional<RotationMap> sx, sy;
    if (r.u8() != 0) {
      sx = read_map(r);
      sy = read_map(r);
    }
    std::vector<std::uint32_t> counts(r.length(4));
    for (auto& c : counts) c = r.u32();
    r.finish();
    cal.density = JointDensity::from_parts(std::move(gx), std::move(gy), phase_bins,
                                           std::move(sx), std::move(sy), std::move(counts));
  }
  return cal;
}

}  // namespace nlpn
