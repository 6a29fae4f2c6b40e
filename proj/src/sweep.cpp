#include "phonon_gate/sweep.hpp"

#include "phonon_gate/errors.hpp"
#include "phonon_gate/units.hpp"
#include "phonon_gate/version.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

namespace phonon_gate {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  return sci(v);
}

// Static partition: worker w evaluates indices w, w + W, w + 2W, ...; each
// result lands in its own slot, so row order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  std::size_t w = workers > 0 ? static_cast<std::size_t>(workers) : std::max(1u, std::thread::hardware_concurrency());
  w = std::min(w, count);
  if (w <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += w) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string input_header(SweepVariable v) {
  switch (v) {
    case SweepVariable::Distance: return "distance_um";
    case SweepVariable::OmegaA: return "omega_a_GHz";
    case SweepVariable::PhononCutoff: return "phonon_cutoff";
    case SweepVariable::ExpansionCoeff: return "expansion_order2_coeff";
  }
  return "input";
}

double display_input(SweepVariable v, double x) {
  switch (v) {
    case SweepVariable::Distance: return units::to_um(x);
    case SweepVariable::OmegaA: return units::to_ghz(x);
    default: return x;
  }
}

PhysicalParams apply_variable(PhysicalParams p, SweepVariable v, double x) {
  switch (v) {
    case SweepVariable::Distance: p.distance = x; break;
    case SweepVariable::OmegaA: p.atom_rabi = x; break;
    case SweepVariable::PhononCutoff: p.phonon_cutoff = static_cast<int>(x); break;
    case SweepVariable::ExpansionCoeff:
      p.expansion_order2 = x == 4.0 ? ExpansionCoefficient::Truncated : ExpansionCoefficient::Taylor;
      break;
  }
  return p;
}

// Restrict `all` columns to the requested outputs, returning their positions.
std::vector<std::size_t> select_columns(const std::vector<std::string>& all, const std::vector<std::string>& wanted) {
  std::vector<std::size_t> idx;
  if (wanted.empty()) {
    for (std::size_t i = 0; i < all.size(); ++i) idx.push_back(i);
    return idx;
  }
  for (const auto& w : wanted) {
    auto it = std::find(all.begin(), all.end(), w);
    if (it == all.end()) throw PhysicsError("unknown sweep output column '" + w + "'");
    idx.push_back(static_cast<std::size_t>(it - all.begin()));
  }
  return idx;
}

SweepResult make_result(const SweepSpec& spec, const std::vector<std::string>& all,
                        const std::vector<std::size_t>& selected) {
  SweepResult r;
  r.variable = spec.variable;
  r.input_column = input_header(spec.variable);
  for (auto i : selected) r.columns.push_back(all[i]);
  r.provenance.push_back("version = " + std::string(kVersion));
  r.provenance.push_back("sweep_variable = " + to_string(spec.variable));
  std::string grid;
  for (std::size_t i = 0; i < spec.grid.size(); ++i) grid += (i ? ", " : "") + sci(spec.grid[i]);
  r.provenance.push_back("sweep_grid = " + grid);
  for (auto& line : parameter_echo(spec.fixed, spec.numeric, spec.options)) r.provenance.push_back(line);
  return r;
}

}  // namespace

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::Distance: return "distance";
    case SweepVariable::OmegaA: return "omega_a";
    case SweepVariable::PhononCutoff: return "phonon_cutoff";
    case SweepVariable::ExpansionCoeff: return "expansion_coeff";
  }
  return "unknown";
}

void SweepSpec::validate() const {
  if (grid.empty()) throw PhysicsError("sweep grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw PhysicsError("sweep grid value is not finite");
    if (i > 0) {
      const bool up = grid[1] > grid[0];
      if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1])) {
        throw PhysicsError("sweep grid must be strictly monotone");
      }
    }
    const double x = grid[i];
    switch (variable) {
      case SweepVariable::Distance:
      case SweepVariable::OmegaA:
        if (!(x > 0.0)) throw PhysicsError("sweep grid values must be positive");
        break;
      case SweepVariable::PhononCutoff:
        if (x != std::floor(x) || x < 2.0) throw PhysicsError("phonon cutoff grid values must be integers >= 2");
        break;
      case SweepVariable::ExpansionCoeff:
        if (x != 4.0 && x != 10.0) throw PhysicsError("expansion coefficient grid values must be 4 or 10");
        break;
    }
  }
}

std::vector<double> linear_grid(double first, double last, int points) {
  if (points < 1) throw PhysicsError("grid needs at least one point");
  if (points == 1) return {first};
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = first + (last - first) * i / (points - 1);
  g.back() = last;
  return g;
}

std::vector<double> default_distance_grid() { return linear_grid(units::um(1.5), units::um(5.0), 200); }

std::vector<double> default_omega_a_grid() {
  return {units::ghz(0.25), units::ghz(0.5), units::ghz(1.0), units::ghz(1.5), units::ghz(2.0)};
}

SweepResult sweep_trap_shift(const SweepSpec& spec) {
  if (spec.variable != SweepVariable::Distance) throw PhysicsError("trap-shift sweep requires variable = distance");
  spec.validate();
  const std::vector<std::string> all{"omega_bar_MHz", "equilibrium_offset_um", "delta_MHz"};
  const auto selected = select_columns(all, spec.outputs);
  SweepResult result = make_result(spec, all, selected);
  result.rows.resize(spec.grid.size());

  parallel_for(spec.grid.size(), spec.workers, [&](std::size_t i) {
    const double x = spec.grid[i];
    SweepRow row;
    row.input = x;
    std::vector<double> v(all.size(), kNaN);
    try {
      const auto s = trap_shift(spec.fixed, x);
      v = {units::to_mhz(s.omega_bar), units::to_um(s.equilibrium_offset), units::to_mhz(s.delta)};
      try {
        expansion_terms(apply_variable(spec.fixed, spec.variable, x));
      } catch (const ExpansionInvalidError&) {
        row.valid = false;
        row.flag = "expansion invalid";
      }
    } catch (const TrapDestabilizedError&) {
      row.valid = false;
      row.flag = "trap destabilized";
    }
    for (auto k : selected) row.values.push_back(v[k]);
    result.rows[i] = std::move(row);
  });
  return result;
}

SweepResult sweep_gate(const SweepSpec& spec) {
  spec.validate();
  const std::vector<std::string> all{"fidelity_avg",  "fidelity_process", "min_dominant_population",
                                     "max_leakage",   "delta_MHz",        "norm_drift"};
  const auto selected = select_columns(all, spec.outputs);
  SweepResult result = make_result(spec, all, selected);
  result.rows.resize(spec.grid.size());

  parallel_for(spec.grid.size(), spec.workers, [&](std::size_t i) {
    const double x = spec.grid[i];
    SweepRow row;
    row.input = x;
    std::vector<double> v(all.size(), kNaN);
    const GateReport r = run_cnot(apply_variable(spec.fixed, spec.variable, x), spec.numeric, spec.options);
    if (r.failed) {
      row.valid = false;
      row.flag = r.failure;
    } else {
      v = {r.fidelity.average,
           r.fidelity.process,
           *std::min_element(r.dominant_population.begin(), r.dominant_population.end()),
           *std::max_element(r.leakage.begin(), r.leakage.end()),
           units::to_mhz(r.shift.delta),
           r.norm_drift};
    }
    for (auto k : selected) row.values.push_back(v[k]);
    result.rows[i] = std::move(row);
  });
  return result;
}

SweepResult sweep_fidelity_vs_omega_a(const SweepSpec& spec) {
  if (spec.variable != SweepVariable::OmegaA) throw PhysicsError("fidelity sweep requires variable = omega_a");
  return sweep_gate(spec);
}

std::vector<BasisIndex> default_tracked_states() {
  return {{atom::kGround0, 0, 1}, {atom::kGround0, 1, 0}, {atom::kRydberg, 0, 1},
          {atom::kRydberg, 1, 0}, {atom::kGround1, 0, 1}, {atom::kGround1, 1, 0}};
}

TraceResult amplitude_traces(const PhysicalParams& p, int logical_input, int samples, const NumericOptions& numeric,
                             const ProtocolOptions& options, std::vector<BasisIndex> tracked) {
  if (logical_input < 0 || logical_input >= logical::kCount) throw DimensionError("logical input out of range");
  if (samples < 1) throw NumericError("trace needs at least one sample per step");
  for (const auto& b : tracked) b.flatten(p.phonon_cutoff);

  const CnotProtocol protocol(p, numeric, options);
  TraceResult out;
  out.input = logical_input;
  out.tracked = std::move(tracked);
  out.provenance.push_back("version = " + std::string(kVersion));
  out.provenance.push_back("trace_input = " + logical::label(logical_input));
  out.provenance.push_back("trace_samples = " + std::to_string(samples));
  out.provenance.push_back("time_axis = tau is t / T_step within each step");
  for (auto& line : parameter_echo(p, numeric, options)) out.provenance.push_back(line);

  auto collect = [&](int step, const PropagationResult& r) {
    for (const auto& s : r.samples) out.samples.push_back({step, s.tau, s.time, s.amplitudes, s.norm});
  };
  const auto r1 = protocol.run_step1(logical::state(logical_input, p.phonon_cutoff), out.tracked, samples);
  collect(1, r1);
  const auto r2 = protocol.run_step2(r1.final_state, out.tracked, samples);
  collect(2, r2);
  const auto r3 = protocol.run_step3(r2.final_state, out.tracked, samples);
  collect(3, r3);
  return out;
}

std::vector<std::string> parameter_echo(const PhysicalParams& p, const NumericOptions& numeric,
                                        const ProtocolOptions& options) {
  std::vector<std::string> l;
  l.push_back("ion_mass = " + sci(p.ion_mass) + " kg");
  l.push_back("trap_freq = " + sci(p.trap_frequency) + " rad/s");
  l.push_back("qubit_freq = " + sci(p.qubit_frequency) + " rad/s");
  l.push_back("c4 = " + sci(p.c4) + " J*m^4");
  l.push_back("x_a = " + sci(p.distance) + " m");
  l.push_back("eta = " + sci(p.lamb_dicke));
  l.push_back("omega_ion = " + sci(p.ion_rabi) + " rad/s");
  l.push_back("omega_a = " + sci(p.atom_rabi) + " rad/s");
  l.push_back("delta_r = " + (p.rydberg_detuning ? sci(*p.rydberg_detuning) + " rad/s" : std::string("resonant")));
  l.push_back("phi = " + sci(p.sideband_phase) + " rad");
  l.push_back("n_cutoff = " + std::to_string(p.phonon_cutoff));
  l.push_back("rydberg_lifetime = " + sci(p.rydberg_lifetime) + " s");
  l.push_back(std::string("expansion_order2_coeff = ") +
              (p.expansion_order2 == ExpansionCoefficient::Truncated ? "truncated" : "taylor"));
  l.push_back(std::string("coupling_prefactors = ") +
              (p.coupling_prefactors == CouplingPrefactors::Consistent ? "consistent" : "literal"));
  l.push_back("max_step = " + sci(numeric.atom_max_step) + " s");
  l.push_back("steps_per_trap_period = " + std::to_string(numeric.steps_per_trap_period));
  l.push_back("norm_tolerance = " + sci(numeric.norm_tolerance));
  l.push_back(std::string("step2_duration_mode = ") +
              (options.step2_duration == Step2Duration::FullTransfer ? "full_transfer" : "literal"));
  l.push_back(std::string("step2_model = ") + (options.step2_model == Step2Model::RotatingFrame ? "rotating" : "microscopic"));
  l.push_back("microscopic_cutoff = " + std::to_string(options.microscopic_cutoff));
  l.push_back(std::string("force_zero_shift = ") + (options.force_zero_shift ? "true" : "false"));
  l.push_back(std::string("phase_search = ") + (options.phase_search ? "true" : "false"));
  return l;
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  for (const auto& line : r.provenance) out << "# " << line << '\n';
  out << r.input_column;
  for (const auto& c : r.columns) out << ',' << c;
  out << ",valid,flag\n";
  for (const auto& row : r.rows) {
    // The input column is for reading; the SI grid is in the provenance.
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", display_input(r.variable, row.input));
    out << buf;
    for (double v : row.values) out << ',' << csv_number(v);
    std::string flag = row.flag;
    std::replace(flag.begin(), flag.end(), ',', ';');
    std::replace(flag.begin(), flag.end(), '\n', ' ');
    out << ',' << (row.valid ? 1 : 0) << ',' << flag << '\n';
  }
}

void write_trace_csv(std::ostream& out, const TraceResult& r) {
  for (const auto& line : r.provenance) out << "# " << line << '\n';
  out << "step,tau,t_s,state,re,im,norm\n";
  for (const auto& s : r.samples) {
    for (std::size_t k = 0; k < r.tracked.size(); ++k) {
      out << s.step << ',' << sci(s.tau) << ',' << sci(s.time) << ',' << r.tracked[k].label() << ','
          << sci(s.amplitudes[k].real()) << ',' << sci(s.amplitudes[k].imag()) << ',' << sci(s.norm) << '\n';
    }
  }
}

}  // namespace phonon_gate
