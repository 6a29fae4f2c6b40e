#pragma once

// Configuration grammar and mode dispatch for the phonon-gate executable.
//
// Config text: one `key = value` per line, `#` starts a comment, blank lines
// ignored, LF or CRLF. Keys are lower_snake and case-sensitive. Dimensioned
// values carry a unit suffix (`omega_a = 2 GHz`, `x_a = 2.57 um`).

#include "phonon_gate/physics.hpp"
#include "phonon_gate/protocol.hpp"
#include "phonon_gate/sweep.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace phonon_gate {

enum class Mode { Gate, SweepShift, SweepFidelity, Traces, Check };

std::string to_string(Mode m);
/// Throws ConfigError for an unknown mode name.
Mode parse_mode(const std::string& name);

struct RunConfig {
  Mode mode = Mode::Gate;
  PhysicalParams params = PhysicalParams::defaults();
  NumericOptions numeric;
  ProtocolOptions options;

  // C4 as written: atomic units scaled by c4_scale, or J m^4 directly.
  double c4_value = -160.0;
  bool c4_atomic_units = true;
  double c4_scale = 5.07e10;

  std::optional<SweepVariable> sweep_variable;  // default per mode
  std::vector<double> sweep_grid;                // SI; empty selects the mode default
  int sweep_workers = 0;
  int trace_input = 0;  // logical index
  int trace_samples = 200;
  std::optional<std::string> output_path;

  bool operator==(const RunConfig&) const = default;
};

/// Parses config text on top of the defaults. Errors carry the line number.
RunConfig parse_config(const std::string& text);

/// Applies `key=value` overrides (as given to --set) on top of `text`.
/// Override errors name the override instead of a line.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides);

/// SI text that parses back to an identical RunConfig.
std::string serialize_config(const RunConfig& config);

/// Variable and grid a sweep mode will actually use.
SweepSpec sweep_spec(const RunConfig& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Built-in oracle suite: interaction frame, closed-form vs. numeric
/// propagators, step halving, cutoff convergence, norm and block structure.
std::vector<CheckResult> run_checks(const RunConfig& config);

enum ExitCode : int { kExitOk = 0, kExitPhysics = 1, kExitNumeric = 2, kExitIo = 3 };

/// Runs the configured mode. Results go to config.output_path (written via a
/// temporary file, removed on failure) or to `out`; diagnostics go to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Maps an exception from the library to an exit code.
int exit_code_for(const std::exception& e);

}  // namespace phonon_gate
