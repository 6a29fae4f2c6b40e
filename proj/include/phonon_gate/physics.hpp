#pragma once

// Physical model: ion-Rydberg-atom polarization potential, its quantized
// expansion, trap renormalization and Hamiltonian builders.
//
// All Hamiltonians are returned as H / hbar in rad/s.

#include "phonon_gate/hilbert.hpp"

#include <optional>
#include <string>

namespace phonon_gate {

/// Second-order coefficient c in V ~ V0 (1 + 4x/x_a + c x^2/x_a^2).
enum class ExpansionCoefficient { Truncated, Taylor };

/// How the quantized Û1/Û2 prefactors are derived from U1_0 and U2_0.
///   Consistent: from the expansion with x = sqrt(hbar / 2 m w)(a + a^dagger),
///               so that Û2 reproduces the trap-shift curvature.
///   Literal:    Û1 = U1_0 / sqrt(2) (a + a^dagger), Û2 = U2_0 (a + a^dagger)^2.
enum class CouplingPrefactors { Consistent, Literal };

double expansion_coefficient_value(ExpansionCoefficient c);

struct PhysicalParams {
  double ion_mass = 0.0;             // kg
  double trap_frequency = 0.0;       // omega_i, rad/s
  double qubit_frequency = 0.0;      // omega_01, rad/s (bookkeeping only)
  double c4 = 0.0;                   // J m^4, signed
  double distance = 0.0;             // x_a, m
  double lamb_dicke = 0.0;           // eta
  double ion_rabi = 0.0;             // Omega_i, rad/s
  double atom_rabi = 0.0;            // Omega_a, rad/s
  std::optional<double> rydberg_detuning;  // delta_r, rad/s; empty tracks V0 / hbar (delta_a = 0)
  double sideband_phase = 0.0;       // phi, rad
  int phonon_cutoff = 10;
  double rydberg_lifetime = 0.0;     // s
  ExpansionCoefficient expansion_order2 = ExpansionCoefficient::Truncated;
  CouplingPrefactors coupling_prefactors = CouplingPrefactors::Consistent;

  /// 87Rb (n = 90) + 9Be+ parameter set.
  static PhysicalParams defaults();

  /// Throws PhysicsError (or a subclass) on any violated invariant.
  void validate() const;

  /// lambda_i = sqrt(hbar / (m omega_i)).
  double oscillator_width() const;
  double c4_effective() const;

  bool operator==(const PhysicalParams&) const = default;
};

struct TrapShift {
  double omega_bar = 0.0;           // rad/s
  double equilibrium_offset = 0.0;  // m
  double delta = 0.0;               // omega_i - omega_bar, rad/s
};

struct ExpansionTerms {
  double v0 = 0.0;    // J
  double u1_0 = 0.0;  // J
  double u2_0 = 0.0;  // J
  double beta = 0.0;
};

/// Motional coupling in rad/s: Û1/hbar = linear (a e^{-iwt} + h.c.),
/// Û2/hbar = quadratic (a^2 e^{-2iwt} + h.c. + a a^dagger + a^dagger a).
struct MotionalCoupling {
  double linear = 0.0;
  double quadratic = 0.0;
};

/// C4 in J m^4 from an atomic-unit value and an enhancement scale.
double convert_c4(double value_au, double scale);

/// Trap frequency and equilibrium shift with the atom in |r> at `distance`.
/// Throws TrapDestabilizedError when the shifted omega_bar^2 <= 0.
TrapShift trap_shift(const PhysicalParams& p, double distance);
TrapShift trap_shift(const PhysicalParams& p);

/// Unexpanded C4 / (x_a - x)^4 for ion displacement x.
double full_potential(const PhysicalParams& p, double ion_displacement);

/// Throws ExpansionInvalidError when beta >= 0.2.
ExpansionTerms expansion_terms(const PhysicalParams& p);

MotionalCoupling motional_coupling(const PhysicalParams& p);

/// delta_a = delta_r - V0 / hbar.
double atom_detuning(const PhysicalParams& p);

/// (Omega_a / 2)(|r><0| + |0><r|) - delta_a |r><r| on the full space.
OperatorMatrix atom_drive_hamiltonian(const PhysicalParams& p);

/// Phonon-space factor (Û1(t) + Û2(t)) / hbar, cutoff x cutoff.
Matrix motional_potential(const PhysicalParams& p, double t);

/// |r><r| (x) 1_ion (x) (Û1(t) + Û2(t)) / hbar on the full space.
OperatorMatrix ion_atom_coupling(const PhysicalParams& p, double t);

/// Red-sideband drive on the ion (x) phonon factor (dimension 2 * cutoff).
struct SidebandHamiltonian {
  OperatorMatrix resonant;   // (eta Omega_i / 2)(a sigma_+ e^{i phi} + h.c.)
  OperatorMatrix frame;      // resonant + (Delta / 2) sigma_z, time independent
  double detuning = 0.0;     // Delta, rad/s (0 without a shift)
  double coupling = 0.0;     // eta Omega_i, rad/s
  double phase = 0.0;
  int cutoff = 0;
  bool lamb_dicke_warning = false;
  std::string warning;

  /// Delta-detuned drive (eta Omega_i / 2)(a sigma_+ e^{i(phi + Delta t)} + h.c.).
  OperatorMatrix lab(double t) const;
};

SidebandHamiltonian red_sideband(const PhysicalParams& p, const std::optional<TrapShift>& shift);

/// Lamb-Dicke drive before the sideband RWA, with delta_i = -omega_i:
/// (Omega_i / 2) sigma_+ {c + i eta (a e^{-iwt} + a^dagger e^{iwt})} e^{i(phi + w t)} + h.c.,
/// c = 1 with the carrier retained, 0 without. Dimension 2 * cutoff.
Matrix lamb_dicke_drive(const PhysicalParams& p, double t, bool include_carrier);

}  // namespace phonon_gate
