#include "phonon_gate/physics.hpp"

#include "phonon_gate/errors.hpp"
#include "phonon_gate/units.hpp"

#include <cmath>
#include <sstream>

namespace phonon_gate {

namespace {

constexpr double kMaxBeta = 0.2;
constexpr double kMaxLambDickeExcursion = 0.5;

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

double expansion_coefficient_value(ExpansionCoefficient c) {
  return c == ExpansionCoefficient::Truncated ? 4.0 : 10.0;
}

PhysicalParams PhysicalParams::defaults() {
  PhysicalParams p;
  p.ion_mass = 9.0 * units::atomic_mass;
  p.trap_frequency = units::mhz(11.2);
  p.qubit_frequency = units::ghz(1.25);
  p.c4 = convert_c4(-160.0, 5.07e10);
  p.distance = units::um(2.57);
  p.lamb_dicke = 0.1;
  p.ion_rabi = units::mhz(1.0);
  p.atom_rabi = units::ghz(1.0);
  p.rydberg_detuning.reset();
  p.sideband_phase = 0.0;
  p.phonon_cutoff = 10;
  p.rydberg_lifetime = units::us(100.0);
  return p;
}

void PhysicalParams::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw PhysicsError(what);
  };
  require(std::isfinite(ion_mass) && ion_mass > 0.0, "ion mass must be positive");
  require(std::isfinite(trap_frequency) && trap_frequency > 0.0, "trap frequency must be positive");
  require(std::isfinite(distance) && distance > 0.0, "ion-atom distance must be positive");
  require(phonon_cutoff >= 2, "phonon cutoff must be at least 2");
  require(std::isfinite(c4), "C4 must be finite");
  require(std::isfinite(lamb_dicke) && lamb_dicke >= 0.0, "Lamb-Dicke parameter must be non-negative");
  require(std::isfinite(ion_rabi) && ion_rabi >= 0.0, "ion Rabi frequency must be non-negative");
  require(std::isfinite(atom_rabi) && atom_rabi >= 0.0, "atom Rabi frequency must be non-negative");
  require(std::isfinite(sideband_phase), "sideband phase must be finite");
  require(std::isfinite(rydberg_lifetime) && rydberg_lifetime >= 0.0, "Rydberg lifetime must be non-negative");
  require(!rydberg_detuning || std::isfinite(*rydberg_detuning), "Rydberg detuning must be finite");
  expansion_terms(*this);
  trap_shift(*this);
}

double PhysicalParams::oscillator_width() const { return std::sqrt(units::hbar / (ion_mass * trap_frequency)); }

double PhysicalParams::c4_effective() const { return std::abs(c4); }

double convert_c4(double value_au, double scale) { return value_au * scale * units::c4_atomic_unit; }

TrapShift trap_shift(const PhysicalParams& p, double distance) {
  if (!(distance > 0.0)) throw PhysicsError("ion-atom distance must be positive");
  // omega_bar^2 = omega^2 - 2 c C4_eff / (m x^6); c = 4 reproduces the 8 C4 / (m x^6) form.
  const double curvature = 2.0 * expansion_coefficient_value(p.expansion_order2) * p.c4_effective() /
                           (p.ion_mass * std::pow(distance, 6));
  const double omega_bar_sq = p.trap_frequency * p.trap_frequency - curvature;
  if (!(omega_bar_sq > 0.0)) {
    throw TrapDestabilizedError("trap destabilized at distance " + format_number(units::to_um(distance)) +
                                " um (shifted omega^2 = " + format_number(omega_bar_sq) + ")");
  }
  TrapShift s;
  s.omega_bar = std::sqrt(omega_bar_sq);
  s.equilibrium_offset = 4.0 * p.c4_effective() / (p.ion_mass * omega_bar_sq * std::pow(distance, 5));
  s.delta = p.trap_frequency - s.omega_bar;
  return s;
}

TrapShift trap_shift(const PhysicalParams& p) { return trap_shift(p, p.distance); }

double full_potential(const PhysicalParams& p, double ion_displacement) {
  if (ion_displacement >= p.distance) {
    throw SingularSeparationError("ion displacement " + format_number(ion_displacement) +
                                  " m reaches the atom position");
  }
  const double sep = p.distance - ion_displacement;
  return p.c4 / (sep * sep * sep * sep);
}

ExpansionTerms expansion_terms(const PhysicalParams& p) {
  ExpansionTerms e;
  e.beta = 4.0 * std::sqrt(2.0) * p.oscillator_width() / p.distance;
  if (!(e.beta < kMaxBeta)) {
    throw ExpansionInvalidError("expansion parameter beta = " + format_number(e.beta) + " is not below 0.2");
  }
  const double d2 = p.distance * p.distance;
  e.v0 = p.c4 / (d2 * d2);
  e.u1_0 = e.v0 * e.beta;
  e.u2_0 = e.v0 * e.beta * e.beta / 8.0 * (expansion_coefficient_value(p.expansion_order2) / 4.0);
  return e;
}

MotionalCoupling motional_coupling(const PhysicalParams& p) {
  const auto e = expansion_terms(p);
  if (p.coupling_prefactors == CouplingPrefactors::Literal) {
    return {e.u1_0 / (std::sqrt(2.0) * units::hbar), e.u2_0 / units::hbar};
  }
  return {e.u1_0 / (2.0 * units::hbar), e.u2_0 / (2.0 * units::hbar)};
}

double atom_detuning(const PhysicalParams& p) {
  if (!p.rydberg_detuning) return 0.0;
  return *p.rydberg_detuning - expansion_terms(p).v0 / units::hbar;
}

OperatorMatrix atom_drive_hamiltonian(const PhysicalParams& p) {
  const auto ops = atom_ops();
  const Matrix h = 0.5 * p.atom_rabi * (ops.rydberg_raise.entries() + ops.rydberg_lower.entries()) -
                   atom_detuning(p) * ops.rydberg_projector.entries();
  return embed(OperatorMatrix(h), Subsystem::Atom, p.phonon_cutoff);
}

Matrix motional_potential(const PhysicalParams& p, double t) {
  const int n = p.phonon_cutoff;
  const Matrix a = annihilation(n).entries();
  const Matrix ad = a.adjoint();
  const auto g = motional_coupling(p);
  const double w = p.trap_frequency;
  const Complex e1 = std::polar(1.0, -w * t);
  const Complex e2 = std::polar(1.0, -2.0 * w * t);
  const Matrix aa = a * a;
  return g.linear * (e1 * a + std::conj(e1) * ad) +
         g.quadratic * (e2 * aa + std::conj(e2) * aa.adjoint() + a * ad + ad * a);
}

OperatorMatrix ion_atom_coupling(const PhysicalParams& p, double t) {
  const Matrix proj = atom_ops().rydberg_projector.entries();
  return OperatorMatrix(kron(proj, kron(Matrix::Identity(kIonDim, kIonDim), motional_potential(p, t))));
}

OperatorMatrix SidebandHamiltonian::lab(double t) const {
  const Matrix a = annihilation(cutoff).entries();
  const Matrix sp = qubit_ops().sigma_plus.entries();
  const Matrix h = 0.5 * coupling * std::polar(1.0, phase + detuning * t) * kron(sp, a);
  return OperatorMatrix(h + h.adjoint());
}

SidebandHamiltonian red_sideband(const PhysicalParams& p, const std::optional<TrapShift>& shift) {
  SidebandHamiltonian s;
  s.cutoff = p.phonon_cutoff;
  s.coupling = p.lamb_dicke * p.ion_rabi;
  s.phase = p.sideband_phase;
  s.detuning = shift ? shift->delta : 0.0;
  const auto q = qubit_ops();
  const Matrix a = annihilation(s.cutoff).entries();
  const Matrix h = 0.5 * s.coupling * std::polar(1.0, s.phase) * kron(q.sigma_plus.entries(), a);
  const Matrix resonant = h + h.adjoint();
  s.resonant = OperatorMatrix(resonant);
  s.frame = OperatorMatrix(resonant + 0.5 * s.detuning *
                                          kron(q.sigma_z.entries(), Matrix::Identity(s.cutoff, s.cutoff)));
  const double excursion = p.lamb_dicke * std::sqrt(static_cast<double>(s.cutoff));
  if (!(excursion < kMaxLambDickeExcursion)) {
    s.lamb_dicke_warning = true;
    s.warning = "eta * sqrt(cutoff) = " + format_number(excursion) + " is outside the Lamb-Dicke regime";
  }
  return s;
}

Matrix lamb_dicke_drive(const PhysicalParams& p, double t, bool include_carrier) {
  const int n = p.phonon_cutoff;
  const Matrix a = annihilation(n).entries();
  const Matrix sp = qubit_ops().sigma_plus.entries();
  const double w = p.trap_frequency;
  const Complex i(0.0, 1.0);
  Matrix inner = i * p.lamb_dicke * (std::polar(1.0, -w * t) * a + std::polar(1.0, w * t) * a.adjoint());
  if (include_carrier) inner += Matrix::Identity(n, n);
  const Matrix h = 0.5 * p.ion_rabi * std::polar(1.0, p.sideband_phase + w * t) * kron(sp, inner);
  return h + h.adjoint();
}

}  // namespace phonon_gate
