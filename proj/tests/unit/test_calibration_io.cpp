#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "nlpn/calibration.hpp"
#include "nlpn/calibration_io.hpp"
#include "nlpn/error.hpp"

using namespace nlpn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nlpn_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

CalibrationOptions small() {
  CalibrationOptions o;
  o.draws = 50'000;
  o.order = 6;
  o.bins_1d = 30;
  o.bins_2d = 10;
  o.density_amplitude_bins = 8;
  o.density_phase_bins = 16;
  return o;
}

Calibration make(double p_dbm, Multiplex m = Multiplex::dual) {
  const Channel ch(reference_distributed_link(), ChannelOptions{.multiplex = m});
  return calibrate(ch, dbm_to_watt(p_dbm), 4, small(), {99, 1});
}

void check_cf(const std::optional<ConditionalCF>& a, const std::optional<ConditionalCF>& b) {
  REQUIRE(a.has_value() == b.has_value());
  if (!a) return;
  CHECK(a->grid_x() == b->grid_x());
  CHECK(a->grid_y() == b->grid_y());
  CHECK(a->order() == b->order());
  CHECK(a->counts() == b->counts());
  CHECK(a->total() == b->total());
  CHECK((a->sums() == b->sums()).all());
}

void check_map(const std::optional<RotationMap>& a, const std::optional<RotationMap>& b) {
  REQUIRE(a.has_value() == b.has_value());
  if (!a) return;
  CHECK(a->grid_x() == b->grid_x());
  CHECK(a->amplitude_scale() == b->amplitude_scale());
  CHECK((a->thetas() == b->thetas()).all());
  for (int i = 0; i < a->bins(); ++i) CHECK(a->usable(i) == b->usable(i));
  CHECK(a->angle(3.3, 2.2) == b->angle(3.3, 2.2));
}

}  // namespace

TEST_CASE("calibration files round-trip every artifact") {
  const fs::path dir = scratch("roundtrip");
  const Calibration cal = make(-8.0);
  const CalibrationHeader h{ScenarioKind::pm, -8.0, 99, 50'000};
  const CalibrationFiles files = calibration_files(dir, ScenarioKind::pm, -8.0);
  save_calibration(cal, h, files);
  for (const fs::path& p : files.expected(Multiplex::dual, true)) CHECK(fs::exists(p));
  CHECK(files.map2d.string().find("p-8.000dBm") != std::string::npos);

  const Calibration back = load_calibration(files, Multiplex::dual, h);
  CHECK(back.order == cal.order);
  CHECK(back.power_w == cal.power_w);
  CHECK(back.amplitude_scale == cal.amplitude_scale);
  check_cf(back.cf_x, cal.cf_x);
  check_cf(back.cf_y, cal.cf_y);
  check_cf(back.cf2d_x, cal.cf2d_x);
  check_cf(back.cf2d_y, cal.cf2d_y);
  check_map(back.map_x, cal.map_x);
  check_map(back.map_y, cal.map_y);
  check_map(back.map2d_x, cal.map2d_x);
  check_map(back.map2d_y, cal.map2d_y);
  REQUIRE(back.density.has_value());
  CHECK(back.density->counts() == cal.density->counts());
  CHECK(back.density->sheared() == cal.density->sheared());
  CHECK(back.density->mass(0.1, -0.2, 3.0, 3.5) == cal.density->mass(0.1, -0.2, 3.0, 3.5));
}

TEST_CASE("single-polarization points store one map") {
  const fs::path dir = scratch("sp");
  const Calibration cal = make(-10.0, Multiplex::single);
  const CalibrationHeader h{ScenarioKind::sp_same_bandwidth, -10.0, 99, 50'000};
  const CalibrationFiles files = calibration_files(dir, h.scenario, h.p_t_dbm);
  save_calibration(cal, h, files);
  CHECK(files.expected(Multiplex::single, false).size() == 1);
  const Calibration back = load_calibration(files, Multiplex::single, h);
  check_map(back.map_x, cal.map_x);
  CHECK_FALSE(back.map2d_x.has_value());
}

TEST_CASE("missing, corrupt and mismatched files") {
  const fs::path dir = scratch("errors");
  const Calibration cal = make(-6.0);
  const CalibrationHeader h{ScenarioKind::pm, -6.0, 99, 50'000};
  const CalibrationFiles files = calibration_files(dir, ScenarioKind::pm, -6.0);
  const auto code_of = [&](const CalibrationFiles& f, const CalibrationHeader& e) {
    try {
      load_calibration(f, Multiplex::dual, e);
    } catch (const Error& err) {
      return err.code();
    }
    return Errc::invalid_parameter;
  };
  CHECK(code_of(files, h) == Errc::calibration_required);

  save_calibration(cal, h, files);
  CalibrationHeader other_power = h;
  other_power.p_t_dbm = -4.0;
  CHECK(code_of(files, other_power) == Errc::io_error);
  CalibrationHeader other_scenario = h;
  other_scenario.scenario = ScenarioKind::sp_same_data_rate;
  CHECK(code_of(files, other_scenario) == Errc::io_error);

  const std::string bytes = slurp(files.map2d);
  {
    std::ofstream out(files.map2d, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK(code_of(files, h) == Errc::io_error);
  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream out(files.map2d, std::ios::binary | std::ios::trunc);
    out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
  }
  CHECK(code_of(files, h) == Errc::io_error);

  fs::remove(files.map2d);
  CHECK(code_of(files, h) == Errc::calibration_required);
}

TEST_CASE("same seed, byte-identical files") {
  const CalibrationHeader h{ScenarioKind::pm, -12.0, 99, 50'000};
  const CalibrationFiles a = calibration_files(scratch("bytes_a"), h.scenario, h.p_t_dbm);
  const CalibrationFiles b = calibration_files(scratch("bytes_b"), h.scenario, h.p_t_dbm);
  save_calibration(make(-12.0), h, a);
  save_calibration(make(-12.0), h, b);
  const auto fa = a.expected(Multiplex::dual, true), fb = b.expected(Multiplex::dual, true);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CAPTURE(fa[i].string());
    CHECK(slurp(fa[i]) == slurp(fb[i]));
    CHECK(!slurp(fa[i]).empty());
  }
}
