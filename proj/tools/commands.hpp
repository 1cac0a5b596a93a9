#ifndef NLPN_TOOLS_COMMANDS_HPP
#define NLPN_TOOLS_COMMANDS_HPP

#include <ostream>

#include "run_config.hpp"

namespace nlpn::cli {

inline constexpr const char* tool_version = "0.1.0";

/// Writes every calibration artifact of every (scenario, power) point under
/// config.calibration_root(), plus manifest.json there. Progress and
/// warnings go to `log`.
void cmd_calibrate(const RunConfig& config, std::ostream& log);

/// Loads each point's calibration (or builds the missing ones when
/// `calibrate_missing`) and writes ser.csv and ser_manifest.json.
void cmd_ser_sweep(const RunConfig& config, bool calibrate_missing, std::ostream& log);

/// Writes ssfm.csv and ssfm_manifest.json.
void cmd_ssfm_sweep(const RunConfig& config, std::ostream& log);

/// Quick property checks against the config's link. Returns true when all
/// pass; one line per check goes to `out`.
bool cmd_validate(const RunConfig& config, std::ostream& out);

}  // namespace nlpn::cli

#endif  // NLPN_TOOLS_COMMANDS_HPP
