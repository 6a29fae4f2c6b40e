#include "phonon_gate/propagate.hpp"

#include "phonon_gate/units.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace phonon_gate {

namespace {

constexpr double kMaxPhasePerStep = units::two_pi / 50.0;

// \int_{t0}^{t0+t} exp(-i w t') dt'
Complex oscillating_integral(double w, double t0, double t) {
  if (std::abs(w * t) < 1e-8) return std::polar(t, -w * (t0 + 0.5 * t));
  return (std::polar(1.0, -w * t0) - std::polar(1.0, -w * (t0 + t))) / Complex(0.0, w);
}

void check_finite(const Vector& v, const std::string& segment, double t) {
  if (!v.allFinite()) throw PropagationError("non-finite amplitude during '" + segment + "'", segment, t, NAN);
}

}  // namespace

HermitianExponential::HermitianExponential(const Matrix& hamiltonian) {
  if (!hamiltonian.allFinite()) throw NumericError("Hamiltonian has non-finite entries");
  if (hermiticity_error(hamiltonian) > OperatorMatrix::kHermitianTolerance) {
    throw NumericError("Hamiltonian is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hamiltonian);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  eigenvectors_ = solver.eigenvectors();
  eigenvalues_ = solver.eigenvalues();
}

Matrix HermitianExponential::propagator(double t) const {
  Eigen::VectorXcd phases(eigenvalues_.size());
  for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) phases(k) = std::polar(1.0, -eigenvalues_(k) * t);
  return eigenvectors_ * phases.asDiagonal() * eigenvectors_.adjoint();
}

Vector HermitianExponential::apply(const Vector& v, double t) const {
  Vector c = eigenvectors_.adjoint() * v;
  for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -eigenvalues_(k) * t);
  return eigenvectors_ * c;
}

void PropagationPlan::validate() const {
  if (!(tolerance > 0.0)) throw NumericError("propagation tolerance must be positive");
  if (samples_per_segment < 0) throw NumericError("samples_per_segment must be non-negative");
  for (const auto& s : segments) {
    if (!(s.duration > 0.0)) throw NumericError("segment '" + s.label + "' has non-positive duration");
    if (!s.time_dependent()) continue;
    if (!(s.max_step > 0.0) || s.max_step > s.duration) {
      throw NumericError("segment '" + s.label + "' needs 0 < max_step <= duration");
    }
    if (s.max_step * s.frequency_scale > kMaxPhasePerStep * (1.0 + 1e-12)) {
      throw NumericError("segment '" + s.label + "' max_step does not resolve its frequency scale");
    }
  }
}

PropagationResult evolve(const StateVector& psi0, const PropagationPlan& plan) {
  plan.validate();
  const double initial_norm = psi0.norm();
  if (!(initial_norm > 0.0) || initial_norm > 1.0 + StateVector::kNormTolerance) {
    throw NumericError("initial state must have norm in (0, 1]");
  }
  const int cutoff = psi0.cutoff();
  const auto dim = psi0.dimension();
  std::vector<Eigen::Index> tracked;
  tracked.reserve(plan.tracked.size());
  for (const auto& b : plan.tracked) tracked.push_back(static_cast<Eigen::Index>(b.flatten(cutoff)));

  PropagationResult result{psi0, 0.0, psi0.top_fock_population(), 0, 0.0, {}};
  Vector psi = psi0.amplitudes();
  double t = plan.start_time;

  auto record = [&](std::size_t seg, double time, double tau, const Vector& v) {
    AmplitudeSample s;
    s.segment = seg;
    s.time = time;
    s.tau = tau;
    s.norm = v.norm();
    s.amplitudes.reserve(tracked.size());
    for (auto idx : tracked) s.amplitudes.push_back(v(idx));
    result.samples.push_back(std::move(s));
  };
  auto monitor = [&](const Vector& v, const std::string& label, double time) {
    check_finite(v, label, time);
    const double drift = std::abs(v.norm() - initial_norm);
    result.norm_drift = std::max(result.norm_drift, drift);
    if (drift > plan.tolerance) {
      throw PropagationError("norm drift " + std::to_string(drift) + " exceeds tolerance in '" + label + "'", label,
                             time, drift);
    }
    const auto probe = StateVector::unnormalized(v, cutoff);
    result.top_fock_population = std::max(result.top_fock_population, probe.top_fock_population());
  };

  const int samples = plan.samples_per_segment;
  for (std::size_t seg = 0; seg < plan.segments.size(); ++seg) {
    const auto& s = plan.segments[seg];
    if (samples > 0) record(seg, t, 0.0, psi);

    if (const auto* h = std::get_if<Matrix>(&s.hamiltonian)) {
      if (h->rows() != dim || h->cols() != dim) throw DimensionError("segment '" + s.label + "' has wrong dimension");
      const HermitianExponential expo(*h);
      const Vector start = psi;
      for (int k = 1; k <= samples; ++k) {
        const double dt = s.duration * k / samples;
        Vector v = expo.apply(start, dt);
        monitor(v, s.label, t + dt);
        record(seg, t + dt, static_cast<double>(k) / samples, v);
        if (k == samples) psi = std::move(v);
      }
      if (samples == 0) {
        psi = expo.apply(start, s.duration);
        monitor(psi, s.label, t + s.duration);
      }
      ++result.steps;
    } else {
      const auto& hfun = std::get<TimeDependentHamiltonian>(s.hamiltonian);
      auto steps = static_cast<long>(std::ceil(s.duration / s.max_step - 1e-9));
      steps = std::max(steps, 1L);
      long stride = 0;
      if (samples > 0) {
        stride = (steps + samples - 1) / samples;
        steps = stride * samples;
      }
      const double dt = s.duration / static_cast<double>(steps);
      for (long k = 0; k < steps; ++k) {
        const Matrix h = hfun(t + (static_cast<double>(k) + 0.5) * dt);
        if (h.rows() != dim || h.cols() != dim) throw DimensionError("segment '" + s.label + "' has wrong dimension");
        psi = HermitianExponential(h).apply(psi, dt);
        monitor(psi, s.label, t + (k + 1) * dt);
        if (stride > 0 && (k + 1) % stride == 0) {
          record(seg, t + (k + 1) * dt, static_cast<double>(k + 1) / static_cast<double>(steps), psi);
        }
      }
      result.steps += static_cast<std::size_t>(steps);
    }
    t += s.duration;
  }
  result.final_state = StateVector::unnormalized(std::move(psi), cutoff);
  return result;
}

void write_amplitude_csv(std::ostream& out, const PropagationPlan& plan, const PropagationResult& result) {
  out << "t,label,re,im\n";
  const auto old = out.precision(17);
  for (const auto& s : result.samples) {
    for (std::size_t k = 0; k < plan.tracked.size(); ++k) {
      out << s.time << ',' << plan.tracked[k].label() << ',' << s.amplitudes[k].real() << ','
          << s.amplitudes[k].imag() << '\n';
    }
  }
  out.precision(old);
}

Matrix atom_phase_operator(const PhysicalParams& p, double t, double t0) {
  const int n = p.phonon_cutoff;
  const Matrix a = annihilation(n).entries();
  const Matrix ad = a.adjoint();
  const Matrix aa = a * a;
  const auto g = motional_coupling(p);
  const double w = p.trap_frequency;
  const Complex i1 = oscillating_integral(w, t0, t);
  const Complex i2 = oscillating_integral(2.0 * w, t0, t);
  const Matrix coupling_integral =
      g.linear * (i1 * a + std::conj(i1) * ad) + g.quadratic * (i2 * aa + std::conj(i2) * aa.adjoint() + t * (a * ad + ad * a));
  return atom_detuning(p) * t * Matrix::Identity(n, n) - coupling_integral;
}

AtomUnitary analytic_atom_unitary(const PhysicalParams& p, double t, double t0) {
  const int n = p.phonon_cutoff;
  const Matrix eta = atom_phase_operator(p, t, t0);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (eta + eta.adjoint()));
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition of the atomic phase operator failed");

  // 2x2 blocks on (|0>_a, |r>_a), expanded into the phonon-space eigenprojectors.
  Matrix u00 = Matrix::Zero(n, n), u0r = Matrix::Zero(n, n), ur0 = Matrix::Zero(n, n), urr = Matrix::Zero(n, n);
  const double rabi_area = p.atom_rabi * t;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lambda = solver.eigenvalues()(k);
    const double theta = std::hypot(lambda, rabi_area);
    const double c = std::cos(0.5 * theta);
    const double sinc = theta > 0.0 ? std::sin(0.5 * theta) / theta : 0.5;
    const Complex global = std::polar(1.0, 0.5 * lambda);
    const Complex i(0.0, 1.0);
    const Matrix proj = solver.eigenvectors().col(k) * solver.eigenvectors().col(k).adjoint();
    u00 += global * (c - i * lambda * sinc) * proj;
    urr += global * (c + i * lambda * sinc) * proj;
    u0r += global * (-i * rabi_area * sinc) * proj;
    ur0 += global * (-i * rabi_area * sinc) * proj;
  }

  const Matrix id_ion = Matrix::Identity(kIonDim, kIonDim);
  const Eigen::Index block = kIonDim * n;
  Matrix u = Matrix::Zero(3 * block, 3 * block);
  u.block(0, 0, block, block) = kron(id_ion, u00);
  u.block(0, 2 * block, block, block) = kron(id_ion, u0r);
  u.block(2 * block, 0, block, block) = kron(id_ion, ur0);
  u.block(2 * block, 2 * block, block, block) = kron(id_ion, urr);
  u.block(block, block, block, block) = Matrix::Identity(block, block);

  AtomUnitary out{OperatorMatrix(std::move(u)), 0.0, false, {}};
  const double u1 = std::abs(expansion_terms(p).u1_0) / units::hbar;
  out.validity_ratio = u1 > 0.0 ? p.atom_rabi / u1 : INFINITY;
  if (out.validity_ratio < 3.0) {
    out.validity_warning = true;
    out.warning = "atomic Rabi frequency is not large compared to U1_0 / hbar (ratio " +
                  std::to_string(out.validity_ratio) + ")";
  }
  return out;
}

OperatorMatrix analytic_sideband_unitary(double omega_n, double delta, double t, double phase) {
  const double rate = std::hypot(omega_n, delta);
  const double half = 0.5 * rate * t;
  const double c = std::cos(half);
  const double s_n = rate > 0.0 ? std::sin(half) * omega_n / rate : 0.0;
  const double s_d = rate > 0.0 ? std::sin(half) * delta / rate : 0.0;
  const Complex i(0.0, 1.0);
  Matrix u(2, 2);
  // cos - i (Delta / W) sin sigma_z - i (Omega_n / W) sin sigma_phi, sigma_z = diag(-1, 1).
  u(0, 0) = c + i * s_d;
  u(1, 1) = c - i * s_d;
  u(0, 1) = -i * s_n * std::polar(1.0, -phase);
  u(1, 0) = -i * s_n * std::polar(1.0, phase);
  return OperatorMatrix(std::move(u));
}

FrameCheckReport interaction_frame_check(const PhysicalParams& p, double duration, int steps_per_trap_period) {
  FrameCheckReport r;
  const double coupling = p.lamb_dicke * p.ion_rabi;
  r.rwa_parameter = coupling / p.trap_frequency;
  r.bound = 10.0 * r.rwa_parameter * r.rwa_parameter;
  r.stark_shift = p.ion_rabi * p.ion_rabi / (2.0 * p.trap_frequency);
  if (duration <= 0.0) {
    if (coupling <= 0.0) {
      r.passed = true;
      return r;
    }
    duration = std::numbers::pi / coupling;
  }
  r.duration = duration;

  // Match the drive phase so that its red-sideband term equals the RWA model.
  PhysicalParams shifted = p;
  shifted.sideband_phase = p.sideband_phase - 0.5 * std::numbers::pi;
  const int n = p.phonon_cutoff;
  Vector start = Vector::Zero(2 * n);
  start(1) = 1.0;  // |0_i, 1>

  const HermitianExponential rwa(red_sideband(p, std::nullopt).resonant.entries());
  const auto steps = static_cast<long>(
      std::ceil(duration * p.trap_frequency / units::two_pi * static_cast<double>(steps_per_trap_period)));
  const double dt = duration / static_cast<double>(std::max(steps, 1L));
  const Matrix rwa_step = rwa.propagator(dt);

  auto run = [&](bool carrier) {
    Vector full = start;
    Vector model = start;
    double worst = 0.0;
    for (long k = 0; k < steps; ++k) {
      const double tm = (static_cast<double>(k) + 0.5) * dt;
      full = HermitianExponential(lamb_dicke_drive(shifted, tm, carrier)).apply(full, dt);
      model = rwa_step * model;
      worst = std::max(worst, (full.cwiseAbs2() - model.cwiseAbs2()).cwiseAbs().maxCoeff());
    }
    return worst;
  };
  r.sideband_discrepancy = run(false);
  r.carrier_discrepancy = run(true);
  r.passed = r.sideband_discrepancy <= r.bound;
  return r;
}

}  // namespace phonon_gate
