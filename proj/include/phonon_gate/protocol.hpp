#pragma once

// Three-pulse ion-atom CNOT: atomic pi pulse (control to |r>), red-sideband
// pulse on the ion (blocked when the atom is in |r>), atomic pi pulse back,
// then an S gate on the control.

#include "phonon_gate/hilbert.hpp"
#include "phonon_gate/physics.hpp"
#include "phonon_gate/propagate.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

namespace phonon_gate {

/// Step II length: pi / (eta Omega_i) for a full sideband transfer, or pi / Omega_i.
enum class Step2Duration { FullTransfer, Literal };

/// Step II dynamics for the Rydberg branch.
///   RotatingFrame: Delta-detuned sideband in the rotating frame.
///   Microscopic:   bare-frame oscillator with the Rydberg-state potential
///                  (displacement + frequency shift), solved in an enlarged
///                  Fock basis and reprojected onto the working cutoff.
enum class Step2Model { RotatingFrame, Microscopic };

struct NumericOptions {
  double atom_max_step = 10e-12;  // s
  int steps_per_trap_period = 50;
  double norm_tolerance = 1e-9;

  bool operator==(const NumericOptions&) const = default;
};

struct ProtocolOptions {
  Step2Duration step2_duration = Step2Duration::FullTransfer;
  Step2Model step2_model = Step2Model::RotatingFrame;
  bool force_zero_shift = false;
  bool phase_search = false;
  int microscopic_cutoff = 512;

  bool operator==(const ProtocolOptions&) const = default;
};

/// Control = atom {|0>_a, |1>_a}; target = dressed pair
/// {0 <-> |0_i, 1_ph>, 1 <-> |1_i, 0_ph>}. Logical index k = 2 * control + target.
namespace logical {
inline constexpr int kCount = 4;
BasisIndex basis(int k);
/// "00", "01", "10", "11".
std::string label(int k);
StateVector state(int k, int cutoff);
/// CNOT permutation with the atom as control.
int cnot_image(int k);
Eigen::Matrix4cd cnot_matrix();
}  // namespace logical

struct Fidelities {
  double average = 0.0;  // (1/4) sum_k |<ideal_k|out_k>|^2
  double process = 0.0;  // |Tr(U_ideal^dagger M)|^2 / 16
};

Fidelities fidelity_metrics(const Eigen::Matrix4cd& truth_table, const Eigen::Matrix4cd& ideal);

struct GateReport {
  Eigen::Matrix4cd truth_table = Eigen::Matrix4cd::Zero();  // (out, in)
  std::array<double, 4> acquired_phases{};
  std::array<double, 4> leakage{};
  std::array<int, 4> dominant_output{};
  std::array<double, 4> dominant_population{};
  Fidelities fidelity;
  double blocked_phase_01 = 0.0;  // Step II phase of |r,01>
  double blocked_phase_10 = 0.0;  // Step II phase of |r,10>
  double norm_drift = 0.0;
  double top_fock_population = 0.0;
  double truncation_loss = 0.0;
  TrapShift shift;
  double distance = 0.0;  // distance actually simulated (phase search may move it)
  double atom_pulse_duration = 0.0;
  double ion_pulse_duration = 0.0;
  double total_duration = 0.0;
  double lifetime_fraction = 0.0;  // total_duration / Rydberg lifetime
  bool failed = false;
  std::string failure;
};

struct BlockadeProfile {
  double max_transfer = 0.0;    // max population moved |r,01> -> |r,10> during Step II
  double final_transfer = 0.0;
  double rabi_bound = 0.0;      // Omega_n^2 / (Omega_n^2 + Delta^2), n = 1
};

class CnotProtocol {
 public:
  /// `shift_override` replaces the Rydberg-branch trap shift computed from
  /// the parameters.
  CnotProtocol(PhysicalParams params, NumericOptions numeric = {}, ProtocolOptions options = {},
               std::optional<TrapShift> shift_override = std::nullopt);

  const PhysicalParams& params() const noexcept { return params_; }
  const TrapShift& shift() const noexcept { return shift_; }
  /// Sideband detuning applied to the Rydberg branch (0 with force_zero_shift).
  double blockade_detuning() const noexcept { return blockade_detuning_; }
  double atom_pulse_duration() const noexcept { return atom_duration_; }
  double ion_pulse_duration() const noexcept { return ion_duration_; }
  double total_duration() const noexcept { return 2.0 * atom_duration_ + ion_duration_; }

  PropagationResult run_step1(const StateVector& psi, std::span<const BasisIndex> tracked = {}, int samples = 0) const;
  PropagationResult run_step2(const StateVector& psi, std::span<const BasisIndex> tracked = {}, int samples = 0) const;
  PropagationResult run_step3(const StateVector& psi, std::span<const BasisIndex> tracked = {}, int samples = 0) const;

  /// Step II propagator on the full space (RotatingFrame model only; exact).
  Matrix step2_unitary() const;

  BlockadeProfile blocked_branch_profile(int samples = 2000) const;

  GateReport run() const;

 private:
  PropagationPlan atom_pulse_plan(double start, const std::string& label) const;
  Vector step2_apply(const Vector& psi, double elapsed, double& truncation_loss) const;

  PhysicalParams params_;
  NumericOptions numeric_;
  ProtocolOptions options_;
  TrapShift shift_;
  double blockade_detuning_ = 0.0;
  double atom_duration_ = 0.0;
  double ion_duration_ = 0.0;
  Matrix step2_resonant_;  // ion (x) phonon, atom levels 0 and 1
  Matrix step2_blocked_;   // ion (x) phonon, atom level r (RotatingFrame model)
  std::optional<HermitianExponential> resonant_expo_;
  std::optional<HermitianExponential> blocked_expo_;
  std::optional<HermitianExponential> microscopic_expo_;
};

/// Distance near p.distance where the Rydberg-branch Step II phase is closest
/// to pi. Searches [0.8, 1.2] x p.distance, skipping destabilized points.
double phase_matched_distance(const PhysicalParams& p, const ProtocolOptions& options);

StateVector step1_excite_control(const StateVector& psi, const PhysicalParams& p, const NumericOptions& numeric = {});
StateVector step2_target_pulse(const StateVector& psi, const PhysicalParams& p, const TrapShift& atom_conditioned_shift,
                               const ProtocolOptions& options = {}, const NumericOptions& numeric = {});
StateVector step3_deexcite_control(const StateVector& psi, const PhysicalParams& p, const ProtocolOptions& options = {},
                                   const NumericOptions& numeric = {});
/// diag(1, i) on the control: every |1>_a amplitude is multiplied by i.
StateVector apply_S_gate(const StateVector& psi);

GateReport run_cnot(const PhysicalParams& p, const NumericOptions& numeric = {}, const ProtocolOptions& options = {});

/// Key = value report followed by nothing else; see write_truth_table_csv.
void write_gate_report(std::ostream& out, const GateReport& report);
/// Columns in_label,out_label,re,im.
void write_truth_table_csv(std::ostream& out, const GateReport& report);

}  // namespace phonon_gate
