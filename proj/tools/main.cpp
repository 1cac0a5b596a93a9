#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "commands.hpp"
#include "nlpn/error.hpp"

namespace {

using namespace nlpn;

int exit_code(Errc code) {
  switch (code) {
    case Errc::invalid_config:
    case Errc::invalid_parameter:
    case Errc::wrong_amplification_kind: return 2;
    case Errc::calibration_required: return 3;
    case Errc::io_error: return 4;
    case Errc::aliasing: return 5;
    case Errc::undefined_input: return 1;
  }
  return 1;
}

int report(std::string_view code, const std::string& message, int status) {
  nlohmann::ordered_json j{{"error", code}, {"message", message}, {"exit_code", status}};
  std::cerr << j.dump() << '\n';
  return status;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Run configuration (JSON with comments)")
      ->envname("NLPN_CONFIG")
      ->required();
  sub->add_option("--seed", c.seed, "Master seed, overrides the config")->envname("NLPN_SEED");
  sub->add_option("--out", c.out, "Output directory, overrides the config")->envname("NLPN_OUT");
  sub->add_option("--threads", c.threads, "Worker cap; results do not depend on it")
      ->envname("NLPN_THREADS")
      ->check(CLI::PositiveNumber);
}

cli::RunConfig resolve(const Common& c) {
  cli::RunConfig config = cli::load_run_config(c.config);
  if (c.seed) config.seed = *c.seed;
  if (c.out) config.output_dir = *c.out;
  if (c.threads) config.threads = *c.threads;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear phase noise channel simulator and PM M-PSK detector toolkit"};
  app.set_version_flag("--version", cli::tool_version);
  app.require_subcommand(1);

  Common common;
  bool calibrate_missing = false;
  auto* calibrate = app.add_subcommand("calibrate", "Build rotation maps and ML densities per power point");
  auto* ser = app.add_subcommand("ser-sweep", "Monte-Carlo SER over the power grid");
  auto* ssfm = app.add_subcommand("ssfm-sweep", "SER over the split-step dispersion-managed link");
  auto* validate = app.add_subcommand("validate", "Run quick property checks on a config");
  for (auto* sub : {calibrate, ser, ssfm, validate}) add_common(sub, common);
  ser->add_flag("--calibrate", calibrate_missing, "Calibrate missing power points in-run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), 2);
  }

  try {
    const cli::RunConfig config = resolve(common);
    if (calibrate->parsed()) cli::cmd_calibrate(config, std::cerr);
    if (ser->parsed()) cli::cmd_ser_sweep(config, calibrate_missing, std::cerr);
    if (ssfm->parsed()) cli::cmd_ssfm_sweep(config, std::cerr);
    if (validate->parsed()) return cli::cmd_validate(config, std::cout) ? 0 : 1;
  } catch (const Error& e) {
    return report(to_string(e.code()), e.what(), exit_code(e.code()));
  } catch (const std::exception& e) {
    return report("internal", e.what(), 1);
  }
  return 0;
}
