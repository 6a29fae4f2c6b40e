// Acceptance suite. `acceptance` runs every criterion; `acceptance N` runs
// one. Prints one PASS/FAIL line per criterion and exits 1 if any failed.

#include "phonon_gate/physics.hpp"
#include "phonon_gate/propagate.hpp"
#include "phonon_gate/protocol.hpp"
#include "phonon_gate/sweep.hpp"
#include "phonon_gate/units.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace phonon_gate;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

const PhysicalParams kRef = PhysicalParams::defaults();

const GateReport& reference_gate() {
  static const GateReport r = run_cnot(kRef);
  return r;
}

Outcome trap_shift_value() {
  const auto s = trap_shift(kRef, units::um(2.57));
  const double mhz = units::to_mhz(s.omega_bar);
  const double rel = std::abs(mhz - 10.61) / 10.61;
  return {rel <= 0.01, "omega_bar/2pi = " + fmt("%.4f", mhz) + " MHz, rel. error " + fmt("%.2e", rel) + " (tol 1e-2)"};
}

Outcome shift_curve_shape() {
  SweepSpec spec;
  spec.grid = default_distance_grid();
  const auto r = sweep_trap_shift(spec);
  int invalid = 0;
  double first_valid = NAN;
  bool omega_increasing = true, offset_decreasing = true, below_asymptote = true;
  const double asymptote = units::to_mhz(kRef.trap_frequency);
  const SweepRow* prev = nullptr;
  for (const auto& row : r.rows) {
    const bool finite = std::isfinite(row.values[0]) && std::isfinite(row.values[1]);
    if (!row.valid || !finite) {
      ++invalid;
      prev = nullptr;
      continue;
    }
    if (std::isnan(first_valid)) first_valid = row.input;
    below_asymptote = below_asymptote && row.values[0] < asymptote;
    if (prev) {
      omega_increasing = omega_increasing && row.values[0] > prev->values[0];
      offset_decreasing = offset_decreasing && row.values[1] < prev->values[1];
    }
    prev = &row;
  }
  std::ostringstream d;
  d << invalid << "/" << r.rows.size() << " points invalid (trap destabilized below "
    << fmt("%.4f", units::to_um(first_valid)) << " um); on the valid range omega_bar increasing: "
    << (omega_increasing ? "yes" : "no") << ", offset decreasing: " << (offset_decreasing ? "yes" : "no")
    << ", below 11.2 MHz: " << (below_asymptote ? "yes" : "no");
  return {invalid == 0 && omega_increasing && offset_decreasing && below_asymptote, d.str()};
}

Outcome blockade() {
  const CnotProtocol c(kRef);
  const auto b = c.blocked_branch_profile(4000);
  const double ratio = b.max_transfer / b.rabi_bound;
  std::ostringstream d;
  d << "Delta/2pi = " << fmt("%.4f", units::to_mhz(c.blockade_detuning())) << " MHz, max transfer "
    << fmt("%.5f", b.max_transfer) << ", final " << fmt("%.5f", b.final_transfer) << ", Rabi bound "
    << fmt("%.5f", b.rabi_bound) << ", ratio " << fmt("%.4f", ratio);
  return {b.max_transfer <= 0.03 && ratio <= 1.5 && ratio >= 1.0 / 1.5, d.str()};
}

Outcome fidelity() {
  const auto& r = reference_gate();
  if (r.failed) return {false, "gate failed: " + r.failure};
  const double da = std::abs(r.fidelity.average - 0.8994);
  const double dp = std::abs(r.fidelity.process - 0.8994);
  std::ostringstream d;
  d << "average " << fmt("%.5f", r.fidelity.average) << ", process " << fmt("%.5f", r.fidelity.process)
    << ", target 0.8994 +- 0.03, closest: " << (da <= dp ? "average" : "process");
  return {std::min(da, dp) <= 0.03, d.str()};
}

Outcome omega_a_trend() {
  SweepSpec spec;
  spec.variable = SweepVariable::OmegaA;
  spec.grid = default_omega_a_grid();
  const auto r = sweep_fidelity_vs_omega_a(spec);
  bool monotone = true, above = false, all_valid = true;
  std::ostringstream d;
  double prev = -1.0;
  for (const auto& row : r.rows) {
    all_valid = all_valid && row.valid;
    const double f = row.values[0];
    d << fmt("%.2f", units::to_ghz(row.input)) << " GHz: " << fmt("%.4f", f) << "; ";
    monotone = monotone && f >= prev;
    prev = f;
    if (row.input >= units::ghz(1.0) - 1.0 && f > 0.9) above = true;
  }
  d << "non-decreasing: " << (monotone ? "yes" : "no") << ", > 0.9 at >= 1 GHz: " << (above ? "yes" : "no");
  return {all_valid && monotone && above, d.str()};
}

Outcome truth_table() {
  const auto& r = reference_gate();
  if (r.failed) return {false, "gate failed: " + r.failure};
  bool ok = true;
  std::ostringstream d;
  for (int k = 0; k < logical::kCount; ++k) {
    const bool right = r.dominant_output[k] == logical::cnot_image(k);
    ok = ok && right && r.dominant_population[k] >= 0.8;
    d << logical::label(k) << "->" << logical::label(r.dominant_output[k]) << " (" << fmt("%.4f", r.dominant_population[k])
      << ")" << (k + 1 < logical::kCount ? ", " : "");
  }
  d << "; required >= 0.8 each";
  return {ok, d.str()};
}

Outcome oracles() {
  const CnotProtocol c(kRef);
  const int n = kRef.phonon_cutoff;
  const auto sb = red_sideband(kRef, c.shift());
  const double t2 = c.ion_pulse_duration();

  // Closed form assembled over the whole sideband space vs. the exponentiated
  // Hamiltonian. Unpaired states (|1_i, N-1>) only pick up the detuning phase.
  const Matrix numeric = HermitianExponential(sb.frame.entries()).propagator(t2);
  Matrix closed = Matrix::Zero(2 * n, 2 * n);
  for (int k = 1; k < n; ++k) {
    const auto u = analytic_sideband_unitary(sb.coupling * std::sqrt(static_cast<double>(k)), sb.detuning, t2, sb.phase);
    const Eigen::Index idx[2] = {k, n + k - 1};
    for (int r = 0; r < 2; ++r)
      for (int q = 0; q < 2; ++q) closed(idx[r], idx[q]) = u.entries()(r, q);
  }
  for (Eigen::Index i : {Eigen::Index(0), Eigen::Index(2 * n - 1)}) {
    closed(i, i) = std::exp(Complex(0.0, -t2) * sb.frame.entries()(i, i));
  }
  const double sideband_err = (numeric - closed).cwiseAbs().maxCoeff();

  const auto atom = analytic_atom_unitary(kRef, c.atom_pulse_duration());
  double atom_infidelity = 0.0;
  NumericOptions fine;
  fine.atom_max_step *= 0.5;
  const CnotProtocol halved(kRef, fine);
  double halving = 0.0;
  for (int k = 0; k < logical::kCount; ++k) {
    const auto psi = logical::state(k, n);
    const Vector a = c.run_step1(psi).final_state.amplitudes();
    const Vector b = halved.run_step1(psi).final_state.amplitudes();
    atom_infidelity = std::max(atom_infidelity, 1.0 - std::norm((atom.unitary.entries() * psi.amplitudes()).dot(a)));
    halving = std::max(halving, (a - b).norm());
  }
  std::ostringstream d;
  d << "sideband closed form " << fmt("%.2e", sideband_err) << " (tol 1e-12), atom closed form infidelity "
    << fmt("%.2e", atom_infidelity) << " (tol 1e-3), step halving " << fmt("%.2e", halving) << " (tol 1e-6)";
  return {sideband_err < 1e-12 && atom_infidelity < 1e-3 && halving < 1e-6, d.str()};
}

Outcome conservation() {
  const CnotProtocol c(kRef);
  const int n = kRef.phonon_cutoff;
  double drift = reference_gate().norm_drift;

  Vector v = Vector::Zero(static_cast<Eigen::Index>(full_dimension(n)));
  v(static_cast<Eigen::Index>(BasisIndex{atom::kGround0, 0, 1}.flatten(n))) = std::sqrt(0.2);
  v(static_cast<Eigen::Index>(BasisIndex{atom::kGround1, 1, 0}.flatten(n))) = Complex(0.0, std::sqrt(0.3));
  v(static_cast<Eigen::Index>(BasisIndex{atom::kRydberg, 0, 1}.flatten(n))) = std::sqrt(0.25);
  v(static_cast<Eigen::Index>(BasisIndex{atom::kRydberg, 1, 3}.flatten(n))) = -std::sqrt(0.25);
  const StateVector psi(v, n);
  const auto r2 = c.run_step2(psi);
  drift = std::max(drift, r2.norm_drift);
  double populations = 0.0;
  for (int a = 0; a < kAtomDim; ++a) {
    populations = std::max(populations, std::abs(r2.final_state.atom_population(a) - psi.atom_population(a)));
  }

  PhysicalParams small = kRef, large = kRef;
  small.phonon_cutoff = 8;
  large.phonon_cutoff = 16;
  const auto a = run_cnot(small), b = run_cnot(large);
  if (a.failed || b.failed) return {false, "gate failed: " + (a.failed ? a.failure : b.failure)};
  drift = std::max({drift, a.norm_drift, b.norm_drift});
  const double cutoff = std::max(std::abs(a.fidelity.average - b.fidelity.average),
                                 std::abs(a.fidelity.process - b.fidelity.process));
  std::ostringstream d;
  d << "max norm drift " << fmt("%.2e", drift) << " (tol 1e-9), atom populations " << fmt("%.2e", populations)
    << " (tol 1e-9), N 8 vs 16 fidelity change " << fmt("%.2e", cutoff) << " (tol 1e-4)";
  return {drift < 1e-9 && populations < 1e-9 && cutoff < 1e-4, d.str()};
}

Outcome decoupling() {
  const CnotProtocol c(kRef);
  const int n = kRef.phonon_cutoff;
  std::vector<BasisIndex> rydberg;
  for (int i = 0; i < kIonDim; ++i)
    for (int k = 0; k < n; ++k) rydberg.push_back({atom::kRydberg, i, k});
  const auto r = c.run_step1(logical::state(2, n), rydberg, 500);
  double worst = 0.0;
  for (const auto& s : r.samples)
    for (const auto& amp : s.amplitudes) worst = std::max(worst, std::abs(amp));
  return {worst < 1e-12, "max |Rydberg amplitude| for |1,01> over 501 samples " + fmt("%.2e", worst) + " (tol 1e-12)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{trap_shift_value, shift_curve_shape, blockade,
                                                       fidelity,         omega_a_trend,     truth_table,
                                                       oracles,          conservation,      decoupling};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [1-9]...\n";
      return 2;
    }
    selected.push_back(k);
  }
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);

  bool all = true;
  for (int k : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " AC" << k << ": " << o.detail << " [" << fmt("%.2f", secs) << " s]"
              << std::endl;
  }
  return all ? 0 : 1;
}
