#pragma once

// Time evolution of StateVectors under piecewise Hamiltonians (H / hbar in
// rad/s), plus closed-form propagators used as cross-checks.

#include "phonon_gate/errors.hpp"
#include "phonon_gate/hilbert.hpp"
#include "phonon_gate/physics.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace phonon_gate {

/// H(t) / hbar at absolute time t.
using TimeDependentHamiltonian = std::function<Matrix(double)>;

/// exp(-i H t) for a fixed Hermitian H via its eigendecomposition. Unitary to
/// rounding for every t.
class HermitianExponential {
 public:
  explicit HermitianExponential(const Matrix& hamiltonian);

  Matrix propagator(double t) const;
  Vector apply(const Vector& v, double t) const;

  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

 private:
  Matrix eigenvectors_;
  Eigen::VectorXd eigenvalues_;
};

struct Segment {
  std::string label;
  std::variant<Matrix, TimeDependentHamiltonian> hamiltonian;
  double duration = 0.0;
  /// Step ceiling for time-dependent segments; static segments are exact.
  double max_step = 0.0;
  /// Fastest frequency the stepping must resolve (rad/s), time-dependent only.
  double frequency_scale = 0.0;

  bool time_dependent() const { return std::holds_alternative<TimeDependentHamiltonian>(hamiltonian); }
};

struct PropagationPlan {
  std::vector<Segment> segments;
  double start_time = 0.0;
  double tolerance = 1e-9;
  /// Basis states whose amplitudes are sampled when samples_per_segment > 0.
  std::vector<BasisIndex> tracked;
  int samples_per_segment = 0;

  /// Throws NumericError when a segment violates duration > 0,
  /// max_step <= duration or max_step * frequency_scale <= 2 pi / 50.
  void validate() const;
};

struct AmplitudeSample {
  std::size_t segment = 0;
  double time = 0.0;  // absolute, s
  double tau = 0.0;   // elapsed fraction of the segment, [0, 1]
  std::vector<Complex> amplitudes;  // ordered as PropagationPlan::tracked
  double norm = 0.0;
};

struct PropagationResult {
  StateVector final_state;
  double norm_drift = 0.0;           // max |‖psi‖ - ‖psi0‖| over all steps
  double top_fock_population = 0.0;  // max over all steps
  std::size_t steps = 0;
  /// Population dropped by a basis reprojection (not a unitarity error).
  double truncation_loss = 0.0;
  std::vector<AmplitudeSample> samples;
};

class PropagationError : public NumericError {
 public:
  PropagationError(const std::string& message, std::string segment, double time, double norm_drift)
      : NumericError(message), segment_(std::move(segment)), time_(time), norm_drift_(norm_drift) {}

  const std::string& segment() const noexcept { return segment_; }
  double time() const noexcept { return time_; }
  double norm_drift() const noexcept { return norm_drift_; }

 private:
  std::string segment_;
  double time_;
  double norm_drift_;
};

/// Static segments use exact exponentiation; time-dependent segments use
/// midpoint-sampled piecewise-constant exponentiation. psi0 may be
/// sub-normalized (after a truncating projection); the drift budget is measured
/// against its initial norm.
PropagationResult evolve(const StateVector& psi0, const PropagationPlan& plan);

/// Write sampled amplitudes as CSV with columns t,label,re,im.
void write_amplitude_csv(std::ostream& out, const PropagationPlan& plan, const PropagationResult& result);

struct AtomUnitary {
  OperatorMatrix unitary;  // full space; identity on the |1>_a block
  double validity_ratio = 0.0;  // Omega_a / (U1_0 / hbar)
  bool validity_warning = false;
  std::string warning;
};

/// First-order closed form for the atomic pulse over [t0, t0 + t]:
/// exp(-i [ (Omega_a t / 2) sigma_x - eta_hat(t) |r><r| ]) with
/// eta_hat(t) = \int (delta_a - Û1 - Û2) dt' / hbar integrated analytically.
/// The phonon-space eta_hat is diagonalized so each eigenvalue yields an
/// exact 2x2 rotation on {|0>_a, |r>_a}.
AtomUnitary analytic_atom_unitary(const PhysicalParams& p, double t, double t0 = 0.0);

/// Phonon-space operator eta_hat(t) (dimension cutoff).
Matrix atom_phase_operator(const PhysicalParams& p, double t, double t0 = 0.0);

/// Closed-form exp(-i H t) for H = (Omega_n / 2) sigma_phi + (Delta / 2) sigma_z
/// on the manifold ordered (|0_i, n>, |1_i, n-1>), where sigma_z is the ionic
/// |1><1| - |0><0| = diag(-1, 1) in this ordering.
OperatorMatrix analytic_sideband_unitary(double omega_n, double delta, double t, double phase = 0.0);

struct FrameCheckReport {
  double duration = 0.0;              // s
  double rwa_parameter = 0.0;         // eta Omega_i / omega_i
  double bound = 0.0;                 // 10 (eta Omega_i / omega_i)^2
  double sideband_discrepancy = 0.0;  // both sidebands kept, carrier dropped
  double carrier_discrepancy = 0.0;   // carrier + both sidebands kept
  double stark_shift = 0.0;           // Omega_i^2 / (2 omega_i), rad/s
  bool passed = false;
};

/// Compares populations under the red-sideband-only Hamiltonian against the
/// Lamb-Dicke drive before the sideband RWA, starting from |0_i, 1>, over
/// `duration` (default: one sideband pi pulse).
FrameCheckReport interaction_frame_check(const PhysicalParams& p, double duration = 0.0,
                                         int steps_per_trap_period = 100);

}  // namespace phonon_gate
