#include "phonon_gate/protocol.hpp"

#include "phonon_gate/errors.hpp"
#include "phonon_gate/units.hpp"

#include <cmath>
#include <future>
#include <numbers>
#include <ostream>
#include <vector>

namespace phonon_gate {

namespace {

constexpr double kMaxPhasePerStep = units::two_pi / 50.0;

double wrap_phase(double phi) { return std::remainder(phi, units::two_pi); }

std::vector<BasisIndex> to_vector(std::span<const BasisIndex> s) { return {s.begin(), s.end()}; }

}  // namespace

namespace logical {

BasisIndex basis(int k) {
  if (k < 0 || k >= kCount) throw DimensionError("logical index out of range");
  const int control = k >> 1;
  const int target = k & 1;
  return target == 0 ? BasisIndex{control, 0, 1} : BasisIndex{control, 1, 0};
}

std::string label(int k) {
  if (k < 0 || k >= kCount) throw DimensionError("logical index out of range");
  return std::string{static_cast<char>('0' + (k >> 1)), static_cast<char>('0' + (k & 1))};
}

StateVector state(int k, int cutoff) {
  const auto b = basis(k);
  return basis_state(b.atom_level, b.ion_level, b.phonon_number, cutoff);
}

int cnot_image(int k) { return (k >> 1) == 1 ? (k ^ 1) : k; }

Eigen::Matrix4cd cnot_matrix() {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  for (int k = 0; k < kCount; ++k) m(cnot_image(k), k) = 1.0;
  return m;
}

}  // namespace logical

Fidelities fidelity_metrics(const Eigen::Matrix4cd& truth_table, const Eigen::Matrix4cd& ideal) {
  Fidelities f;
  for (int k = 0; k < 4; ++k) f.average += std::norm(ideal.col(k).dot(truth_table.col(k)));
  f.average /= 4.0;
  f.process = std::norm((ideal.adjoint() * truth_table).trace()) / 16.0;
  return f;
}

CnotProtocol::CnotProtocol(PhysicalParams params, NumericOptions numeric, ProtocolOptions options,
                           std::optional<TrapShift> shift_override)
    : params_(std::move(params)), numeric_(numeric), options_(options) {
  params_.validate();
  if (!(numeric_.atom_max_step > 0.0) || numeric_.steps_per_trap_period < 2 || !(numeric_.norm_tolerance > 0.0)) {
    throw NumericError("invalid numeric options");
  }
  if (!(params_.atom_rabi > 0.0)) throw PhysicsError("atomic Rabi frequency must be positive for the gate");
  const double coupling = params_.lamb_dicke * params_.ion_rabi;
  if (!(coupling > 0.0)) throw PhysicsError("sideband coupling eta * Omega_i must be positive for the gate");

  shift_ = shift_override ? *shift_override : trap_shift(params_);
  blockade_detuning_ = options_.force_zero_shift ? 0.0 : shift_.delta;
  atom_duration_ = std::numbers::pi / params_.atom_rabi;
  ion_duration_ = options_.step2_duration == Step2Duration::FullTransfer ? std::numbers::pi / coupling
                                                                         : std::numbers::pi / params_.ion_rabi;

  const auto sideband = red_sideband(params_, std::nullopt);
  step2_resonant_ = sideband.resonant.entries();
  const Matrix sigma_z = kron(qubit_ops().sigma_z.entries(), Matrix::Identity(params_.phonon_cutoff, params_.phonon_cutoff));
  step2_blocked_ = step2_resonant_ + 0.5 * blockade_detuning_ * sigma_z;
  resonant_expo_.emplace(step2_resonant_);
  blocked_expo_.emplace(step2_blocked_);

  if (options_.step2_model == Step2Model::Microscopic) {
    PhysicalParams wide = params_;
    wide.phonon_cutoff = std::max(options_.microscopic_cutoff, params_.phonon_cutoff);
    const int m = wide.phonon_cutoff;
    Matrix h = red_sideband(wide, std::nullopt).resonant.entries();
    // force_zero_shift drops the Rydberg-state potential altogether.
    if (!options_.force_zero_shift) h += kron(Matrix::Identity(kIonDim, kIonDim), motional_potential(wide, 0.0));
    for (int i = 0; i < kIonDim; ++i) {
      for (int k = 0; k < m; ++k) h(i * m + k, i * m + k) += params_.trap_frequency * (k + (i == 0 ? -0.5 : 0.5));
    }
    microscopic_expo_.emplace(h);
  }
}

PropagationPlan CnotProtocol::atom_pulse_plan(double start, const std::string& label) const {
  const int n = params_.phonon_cutoff;
  const Matrix drive = atom_drive_hamiltonian(params_).entries();
  const Eigen::Index block = kIonDim * n;
  const PhysicalParams p = params_;
  TimeDependentHamiltonian h = [drive, p, n, block](double t) {
    Matrix out = drive;
    const Matrix m = motional_potential(p, t);
    for (int i = 0; i < kIonDim; ++i) out.block(2 * block + i * n, 2 * block + i * n, n, n) += m;
    return out;
  };
  Segment s;
  s.label = label;
  s.hamiltonian = std::move(h);
  s.duration = atom_duration_;
  s.frequency_scale = std::max(params_.atom_rabi, 2.0 * params_.trap_frequency);
  const double trap_step = units::two_pi / (params_.trap_frequency * numeric_.steps_per_trap_period);
  s.max_step = std::min({numeric_.atom_max_step, trap_step, kMaxPhasePerStep / s.frequency_scale, s.duration});

  PropagationPlan plan;
  plan.segments.push_back(std::move(s));
  plan.start_time = start;
  plan.tolerance = numeric_.norm_tolerance;
  return plan;
}

PropagationResult CnotProtocol::run_step1(const StateVector& psi, std::span<const BasisIndex> tracked,
                                          int samples) const {
  auto plan = atom_pulse_plan(0.0, "step I");
  plan.tracked = to_vector(tracked);
  plan.samples_per_segment = samples;
  return evolve(psi, plan);
}

PropagationResult CnotProtocol::run_step3(const StateVector& psi, std::span<const BasisIndex> tracked,
                                          int samples) const {
  auto plan = atom_pulse_plan(atom_duration_ + ion_duration_, "step III");
  plan.tracked = to_vector(tracked);
  plan.samples_per_segment = samples;
  return evolve(psi, plan);
}

Vector CnotProtocol::step2_apply(const Vector& psi, double elapsed, double& truncation_loss) const {
  const int n = params_.phonon_cutoff;
  const Eigen::Index block = kIonDim * n;
  Vector out(psi.size());
  for (int a = 0; a < kAtomDim; ++a) {
    const Vector part = psi.segment(a * block, block);
    if (a != atom::kRydberg) {
      out.segment(a * block, block) = resonant_expo_->apply(part, elapsed);
    } else if (!microscopic_expo_) {
      out.segment(a * block, block) = blocked_expo_->apply(part, elapsed);
    } else {
      const int m = std::max(options_.microscopic_cutoff, n);
      Vector wide = Vector::Zero(kIonDim * m);
      for (int i = 0; i < kIonDim; ++i) wide.segment(i * m, n) = part.segment(i * n, n);
      wide = microscopic_expo_->apply(wide, elapsed);
      Vector back(block);
      for (int i = 0; i < kIonDim; ++i) {
        for (int k = 0; k < n; ++k) {
          const double level = k + (i == 0 ? -0.5 : 0.5);
          back(i * n + k) = wide(i * m + k) * std::polar(1.0, params_.trap_frequency * level * elapsed);
        }
      }
      truncation_loss += std::max(0.0, wide.squaredNorm() - back.squaredNorm());
      out.segment(a * block, block) = back;
    }
  }
  return out;
}

PropagationResult CnotProtocol::run_step2(const StateVector& psi, std::span<const BasisIndex> tracked,
                                          int samples) const {
  const int n = params_.phonon_cutoff;
  if (psi.cutoff() != n) throw DimensionError("state cutoff does not match the protocol");
  const double initial_norm = psi.norm();
  std::vector<Eigen::Index> idx;
  for (const auto& b : tracked) idx.push_back(static_cast<Eigen::Index>(b.flatten(n)));

  PropagationResult result{psi, 0.0, psi.top_fock_population(), 1, 0.0, {}};
  const double start = atom_duration_;
  auto sample = [&](const Vector& v, double tau) {
    AmplitudeSample s;
    s.segment = 0;
    s.time = start + tau * ion_duration_;
    s.tau = tau;
    s.norm = v.norm();
    for (auto k : idx) s.amplitudes.push_back(v(k));
    result.samples.push_back(std::move(s));
  };
  auto check = [&](const Vector& v, double loss, double time) {
    if (!v.allFinite()) throw PropagationError("non-finite amplitude during 'step II'", "step II", time, NAN);
    // Reprojection loss is bookkept separately from unitarity drift.
    const double drift = std::abs(std::sqrt(v.squaredNorm() + loss) - initial_norm);
    result.norm_drift = std::max(result.norm_drift, drift);
    if (drift > numeric_.norm_tolerance) {
      throw PropagationError("norm drift " + std::to_string(drift) + " exceeds tolerance in 'step II'", "step II",
                             time, drift);
    }
    result.top_fock_population =
        std::max(result.top_fock_population, StateVector::unnormalized(v, n).top_fock_population());
  };

  Vector final_state;
  if (samples > 0) {
    sample(psi.amplitudes(), 0.0);
    for (int k = 1; k <= samples; ++k) {
      const double tau = static_cast<double>(k) / samples;
      double loss = 0.0;
      Vector v = step2_apply(psi.amplitudes(), tau * ion_duration_, loss);
      check(v, loss, start + tau * ion_duration_);
      sample(v, tau);
      if (k == samples) {
        final_state = std::move(v);
        result.truncation_loss = loss;
      }
    }
  } else {
    double loss = 0.0;
    final_state = step2_apply(psi.amplitudes(), ion_duration_, loss);
    check(final_state, loss, start + ion_duration_);
    result.truncation_loss = loss;
  }
  result.final_state = StateVector::unnormalized(std::move(final_state), n);
  return result;
}

Matrix CnotProtocol::step2_unitary() const {
  if (microscopic_expo_) throw NumericError("step2_unitary is only defined for the rotating-frame model");
  const int n = params_.phonon_cutoff;
  const Eigen::Index block = kIonDim * n;
  Matrix u = Matrix::Zero(3 * block, 3 * block);
  const Matrix res = resonant_expo_->propagator(ion_duration_);
  u.block(0, 0, block, block) = res;
  u.block(block, block, block, block) = res;
  u.block(2 * block, 2 * block, block, block) = blocked_expo_->propagator(ion_duration_);
  return u;
}

BlockadeProfile CnotProtocol::blocked_branch_profile(int samples) const {
  const int n = params_.phonon_cutoff;
  const auto start = basis_state(atom::kRydberg, 0, 1, n);
  const std::array<BasisIndex, 1> target{BasisIndex{atom::kRydberg, 1, 0}};
  const auto r = run_step2(start, target, std::max(samples, 1));
  BlockadeProfile out;
  for (const auto& s : r.samples) out.max_transfer = std::max(out.max_transfer, std::norm(s.amplitudes[0]));
  out.final_transfer = std::norm(r.samples.back().amplitudes[0]);
  const double omega_n = params_.lamb_dicke * params_.ion_rabi;
  out.rabi_bound = omega_n * omega_n / (omega_n * omega_n + blockade_detuning_ * blockade_detuning_);
  return out;
}

GateReport CnotProtocol::run() const {
  if (options_.phase_search) {
    PhysicalParams moved = params_;
    moved.distance = phase_matched_distance(params_, options_);
    ProtocolOptions inner = options_;
    inner.phase_search = false;
    return CnotProtocol(moved, numeric_, inner).run();
  }

  GateReport report;
  report.shift = shift_;
  report.distance = params_.distance;
  report.atom_pulse_duration = atom_duration_;
  report.ion_pulse_duration = ion_duration_;
  report.total_duration = total_duration();
  report.lifetime_fraction = params_.rydberg_lifetime > 0.0 ? total_duration() / params_.rydberg_lifetime : 0.0;

  struct Outcome {
    Vector final_state;
    double norm_drift = 0.0;
    double top_fock = 0.0;
    double loss = 0.0;
    std::string error;
  };
  auto simulate = [this](int k) {
    Outcome o;
    try {
      const auto r1 = run_step1(logical::state(k, params_.phonon_cutoff));
      const auto r2 = run_step2(r1.final_state);
      const auto r3 = run_step3(r2.final_state);
      o.final_state = apply_S_gate(r3.final_state).amplitudes();
      o.norm_drift = std::max({r1.norm_drift, r2.norm_drift, r3.norm_drift});
      o.top_fock = std::max({r1.top_fock_population, r2.top_fock_population, r3.top_fock_population});
      o.loss = r2.truncation_loss;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    return o;
  };

  std::array<std::future<Outcome>, logical::kCount> jobs;
  for (int k = 0; k < logical::kCount; ++k) jobs[k] = std::async(std::launch::async, simulate, k);

  const int n = params_.phonon_cutoff;
  for (int k = 0; k < logical::kCount; ++k) {
    Outcome o = jobs[k].get();
    if (!o.error.empty()) {
      if (!report.failed) {
        report.failed = true;
        report.failure = "input |" + logical::label(k) + ">: " + o.error;
      }
      continue;
    }
    for (int j = 0; j < logical::kCount; ++j) {
      report.truth_table(j, k) = o.final_state(static_cast<Eigen::Index>(logical::basis(j).flatten(n)));
    }
    report.norm_drift = std::max(report.norm_drift, o.norm_drift);
    report.top_fock_population = std::max(report.top_fock_population, o.top_fock);
    report.truncation_loss = std::max(report.truncation_loss, o.loss);
  }
  if (report.failed) return report;

  for (int k = 0; k < logical::kCount; ++k) {
    const auto col = report.truth_table.col(k);
    report.leakage[k] = std::max(0.0, 1.0 - col.squaredNorm());
    report.acquired_phases[k] = std::arg(col(logical::cnot_image(k)));
    Eigen::Index best = 0;
    col.cwiseAbs2().maxCoeff(&best);
    report.dominant_output[k] = static_cast<int>(best);
    report.dominant_population[k] = std::norm(col(best));
  }
  report.fidelity = fidelity_metrics(report.truth_table, logical::cnot_matrix());

  const Eigen::Index block = kIonDim * n;
  const Matrix blocked = blocked_expo_->propagator(ion_duration_);
  if (!microscopic_expo_) {
    report.blocked_phase_01 = std::arg(blocked(1, 1));      // |0_i, 1> within the Rydberg block
    report.blocked_phase_10 = std::arg(blocked(n, n));      // |1_i, 0>
  } else {
    double loss = 0.0;
    const auto r01 = logical::basis(0), r10 = logical::basis(1);
    Vector v = Vector::Zero(3 * block);
    v(static_cast<Eigen::Index>(BasisIndex{atom::kRydberg, r01.ion_level, r01.phonon_number}.flatten(n))) = 1.0;
    report.blocked_phase_01 = std::arg(step2_apply(v, ion_duration_, loss)(
        static_cast<Eigen::Index>(BasisIndex{atom::kRydberg, r01.ion_level, r01.phonon_number}.flatten(n))));
    v.setZero();
    v(static_cast<Eigen::Index>(BasisIndex{atom::kRydberg, r10.ion_level, r10.phonon_number}.flatten(n))) = 1.0;
    report.blocked_phase_10 = std::arg(step2_apply(v, ion_duration_, loss)(
        static_cast<Eigen::Index>(BasisIndex{atom::kRydberg, r10.ion_level, r10.phonon_number}.flatten(n))));
  }
  return report;
}

double phase_matched_distance(const PhysicalParams& p, const ProtocolOptions& options) {
  const double coupling = p.lamb_dicke * p.ion_rabi;
  const double duration = options.step2_duration == Step2Duration::FullTransfer ? std::numbers::pi / coupling
                                                                                : std::numbers::pi / p.ion_rabi;
  constexpr int kPoints = 801;
  double best = p.distance;
  double best_error = INFINITY;
  for (int k = 0; k < kPoints; ++k) {
    const double d = p.distance * (0.8 + 0.4 * k / (kPoints - 1));
    double delta = 0.0;
    try {
      delta = trap_shift(p, d).delta;
    } catch (const TrapDestabilizedError&) {
      continue;
    }
    const auto u = analytic_sideband_unitary(coupling, delta, duration, p.sideband_phase);
    const double err = std::abs(wrap_phase(std::arg(u(0, 0)) - std::numbers::pi));
    if (err < best_error) {
      best_error = err;
      best = d;
    }
  }
  return best;
}

StateVector step1_excite_control(const StateVector& psi, const PhysicalParams& p, const NumericOptions& numeric) {
  return CnotProtocol(p, numeric).run_step1(psi).final_state;
}

StateVector step2_target_pulse(const StateVector& psi, const PhysicalParams& p, const TrapShift& atom_conditioned_shift,
                               const ProtocolOptions& options, const NumericOptions& numeric) {
  return CnotProtocol(p, numeric, options, atom_conditioned_shift).run_step2(psi).final_state;
}

StateVector step3_deexcite_control(const StateVector& psi, const PhysicalParams& p, const ProtocolOptions& options,
                                   const NumericOptions& numeric) {
  return CnotProtocol(p, numeric, options).run_step3(psi).final_state;
}

StateVector apply_S_gate(const StateVector& psi) {
  Vector v = psi.amplitudes();
  const Eigen::Index block = kIonDim * psi.cutoff();
  v.segment(atom::kGround1 * block, block) *= Complex(0.0, 1.0);
  return StateVector::unnormalized(std::move(v), psi.cutoff());
}

GateReport run_cnot(const PhysicalParams& p, const NumericOptions& numeric, const ProtocolOptions& options) {
  try {
    return CnotProtocol(p, numeric, options).run();
  } catch (const std::exception& e) {
    GateReport r;
    r.failed = true;
    r.failure = e.what();
    r.distance = p.distance;
    return r;
  }
}

void write_gate_report(std::ostream& out, const GateReport& r) {
  const auto old = out.precision(17);
  out << "failed = " << (r.failed ? "true" : "false") << '\n';
  if (r.failed) out << "failure = " << r.failure << '\n';
  out << "fidelity_avg = " << r.fidelity.average << '\n';
  out << "fidelity_process = " << r.fidelity.process << '\n';
  out << "distance_m = " << r.distance << '\n';
  out << "omega_bar_rad_s = " << r.shift.omega_bar << '\n';
  out << "trap_shift_delta_rad_s = " << r.shift.delta << '\n';
  out << "equilibrium_offset_m = " << r.shift.equilibrium_offset << '\n';
  out << "atom_pulse_duration_s = " << r.atom_pulse_duration << '\n';
  out << "ion_pulse_duration_s = " << r.ion_pulse_duration << '\n';
  out << "total_duration_s = " << r.total_duration << '\n';
  out << "rydberg_lifetime_fraction = " << r.lifetime_fraction << '\n';
  out << "blocked_phase_01_rad = " << r.blocked_phase_01 << '\n';
  out << "blocked_phase_10_rad = " << r.blocked_phase_10 << '\n';
  out << "norm_drift = " << r.norm_drift << '\n';
  out << "top_fock_population = " << r.top_fock_population << '\n';
  out << "truncation_loss = " << r.truncation_loss << '\n';
  for (int k = 0; k < logical::kCount; ++k) {
    const auto in = logical::label(k);
    out << "leakage_" << in << " = " << r.leakage[k] << '\n';
    out << "acquired_phase_" << in << "_rad = " << r.acquired_phases[k] << '\n';
    out << "dominant_output_" << in << " = " << logical::label(r.dominant_output[k]) << '\n';
    out << "dominant_population_" << in << " = " << r.dominant_population[k] << '\n';
  }
  out.precision(old);
}

void write_truth_table_csv(std::ostream& out, const GateReport& r) {
  const auto old = out.precision(17);
  out << "in_label,out_label,re,im\n";
  for (int k = 0; k < logical::kCount; ++k) {
    for (int j = 0; j < logical::kCount; ++j) {
      out << logical::label(k) << ',' << logical::label(j) << ',' << r.truth_table(j, k).real() << ','
          << r.truth_table(j, k).imag() << '\n';
    }
  }
  out.precision(old);
}

}  // namespace phonon_gate
