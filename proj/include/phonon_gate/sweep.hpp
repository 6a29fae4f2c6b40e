#pragma once

// Parameter scans: trap shift vs. distance, gate fidelity vs. a swept
// parameter, and per-step amplitude traces. Every grid point yields a row,
// failed points included (flagged).

#include "phonon_gate/physics.hpp"
#include "phonon_gate/protocol.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace phonon_gate {

enum class SweepVariable { Distance, OmegaA, PhononCutoff, ExpansionCoeff };

std::string to_string(SweepVariable v);

/// Grid values are SI (m, rad/s); phonon_cutoff takes integers and
/// expansion_coeff takes 4 (truncated) or 10 (Taylor).
struct SweepSpec {
  SweepVariable variable = SweepVariable::Distance;
  std::vector<double> grid;
  PhysicalParams fixed = PhysicalParams::defaults();
  NumericOptions numeric;
  ProtocolOptions options;
  /// Subset of the available columns, in output order; empty selects all.
  std::vector<std::string> outputs;
  /// 0 picks std::thread::hardware_concurrency().
  int workers = 0;

  /// Throws PhysicsError on an empty or non-strictly-monotone grid, or on
  /// grid values that cannot be applied to the variable.
  void validate() const;
};

struct SweepRow {
  double input = 0.0;           // SI
  std::vector<double> values;   // ordered as SweepResult::columns, NaN when unavailable
  bool valid = true;
  std::string flag;             // empty when valid
};

struct SweepResult {
  SweepVariable variable = SweepVariable::Distance;
  std::string input_column;          // header with unit, e.g. "distance_um"
  std::vector<std::string> columns;  // headers with units
  std::vector<SweepRow> rows;
  /// "key = value" lines (SI) sufficient to rerun the sweep.
  std::vector<std::string> provenance;
};

/// Uniform grid of `points` values from `first` to `last` inclusive.
std::vector<double> linear_grid(double first, double last, int points);

/// 1.5 to 5 um, 200 points.
std::vector<double> default_distance_grid();
/// Omega_a / 2 pi = 0.25, 0.5, 1, 1.5, 2 GHz.
std::vector<double> default_omega_a_grid();

/// Columns omega_bar_MHz, equilibrium_offset_um, delta_MHz. Destabilized
/// points are kept with NaN values and flagged.
SweepResult sweep_trap_shift(const SweepSpec& spec);

/// Full gate per grid point. Columns fidelity_avg, fidelity_process,
/// min_dominant_population, max_leakage, delta_MHz, norm_drift.
SweepResult sweep_gate(const SweepSpec& spec);

/// sweep_gate restricted to variable = omega_a.
SweepResult sweep_fidelity_vs_omega_a(const SweepSpec& spec);

struct TraceSample {
  int step = 0;       // 1, 2, 3
  double tau = 0.0;   // t / T_step within the step, [0, 1]
  double time = 0.0;  // absolute, s
  std::vector<Complex> amplitudes;  // ordered as TraceResult::tracked
  double norm = 0.0;  // full-state norm
};

struct TraceResult {
  int input = 0;  // logical index
  std::vector<BasisIndex> tracked;
  std::vector<TraceSample> samples;
  std::vector<std::string> provenance;
};

/// |0,01>, |0,10>, |r,01>, |r,10>, |1,01>, |1,10>.
std::vector<BasisIndex> default_tracked_states();

/// Amplitudes of the tracked states over Steps I-III for one logical input,
/// `samples` points per step on a uniform t / T_step grid.
TraceResult amplitude_traces(const PhysicalParams& p, int logical_input, int samples = 200,
                             const NumericOptions& numeric = {}, const ProtocolOptions& options = {},
                             std::vector<BasisIndex> tracked = default_tracked_states());

/// SI "key = value" echo of everything that determines a run. Keys follow the
/// configuration grammar, so the lines parse back into the same parameters.
std::vector<std::string> parameter_echo(const PhysicalParams& p, const NumericOptions& numeric,
                                        const ProtocolOptions& options);

/// `#`-prefixed provenance, then the header row, then one line per row.
/// Columns: input, requested outputs, valid (0/1), flag.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
/// Columns step,tau,t_s,state,re,im,norm.
void write_trace_csv(std::ostream& out, const TraceResult& result);

}  // namespace phonon_gate
