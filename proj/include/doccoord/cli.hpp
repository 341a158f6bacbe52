#pragma once

#include <string>

#include "doccoord/scenario.hpp"

namespace doccoord::cli {

/// Exit codes: 0 pass, 1 config/internal error, 2 analysis failure
/// (certificate FAIL, divergence, infeasible synthesis).
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFail = 2;

/// Certificate construction + verification; writes <out>/verify_report.json.
int cmd_verify(const std::string& config_path, const Overrides& ov);

/// Gain design; writes <out>/gains.json with the verifying certificate.
int cmd_synthesize(const std::string& config_path, const Overrides& ov);

/// Closed-loop run; writes <out>/trajectory.csv and <out>/metrics.json.
int cmd_simulate(const std::string& config_path, const Overrides& ov);

/// End-to-end run of the bundled benchmark scenario: verify, simulate,
/// metrics; writes a report bundle under <out>/reproduce/.
int cmd_reproduce(const Overrides& ov);

/// Resolves the output directory: override > DOC_COORD_OUT > config value.
std::string resolve_output_dir(const ScenarioConfig& cfg, const Overrides& ov);

}  // namespace doccoord::cli
