#include "phonon_gate/cli.hpp"

#include "phonon_gate/errors.hpp"
#include "phonon_gate/units.hpp"
#include "phonon_gate/version.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace phonon_gate {

namespace {

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty() || !(k[0] >= 'a' && k[0] <= 'z')) return false;
  return std::all_of(k.begin(), k.end(), [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; });
}

struct Entry {
  std::string key;
  std::string value;
  int line = 0;             // 0 for --set overrides
  std::string origin;       // "line N" or "--set key=value"
};

[[noreturn]] void fail(const Entry& e, const std::string& message) {
  if (e.line > 0) throw ConfigError(e.key + ": " + message, e.line);
  throw ConfigError(e.origin + ": " + e.key + ": " + message, 0);
}

// Scale factors to SI for each quantity kind. Frequencies are cyclic unless
// given in rad/s.
using UnitTable = std::map<std::string, double>;

const UnitTable& frequency_units() {
  static const UnitTable t{{"Hz", units::two_pi}, {"kHz", units::two_pi * 1e3}, {"MHz", units::two_pi * 1e6},
                           {"GHz", units::two_pi * 1e9}, {"rad/s", 1.0}};
  return t;
}
const UnitTable& length_units() {
  static const UnitTable t{{"m", 1.0}, {"um", 1e-6}, {"nm", 1e-9}};
  return t;
}
const UnitTable& time_units() {
  static const UnitTable t{{"s", 1.0}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
  return t;
}
const UnitTable& mass_units() {
  static const UnitTable t{{"kg", 1.0}, {"u", units::atomic_mass}};
  return t;
}
const UnitTable& angle_units() {
  static const UnitTable t{{"", 1.0}, {"rad", 1.0}};
  return t;
}
const UnitTable& dimensionless() {
  static const UnitTable t{{"", 1.0}};
  return t;
}

std::string unit_list(const UnitTable& t) {
  std::string s;
  for (const auto& [u, f] : t) {
    if (u.empty()) continue;
    s += (s.empty() ? "" : ", ") + u;
  }
  return s.empty() ? "none" : s;
}

// Splits "<number> [unit]".
std::pair<double, std::string> split_number(const Entry& e, const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) fail(e, "missing value");
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) fail(e, "malformed number '" + s + "'");
  if (!std::isfinite(v)) fail(e, "value must be finite");
  return {v, trim(std::string(end))};
}

double quantity(const Entry& e, const std::string& text, const UnitTable& table) {
  auto [v, unit] = split_number(e, text);
  auto it = table.find(unit);
  if (it == table.end()) {
    if (unit.empty()) fail(e, "missing unit (expected one of " + unit_list(table) + ")");
    fail(e, "unit '" + unit + "' does not match (expected " + unit_list(table) + ")");
  }
  return v * it->second;
}

double quantity(const Entry& e, const UnitTable& table) { return quantity(e, e.value, table); }

int integer(const Entry& e) {
  const std::string s = trim(e.value);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') fail(e, "expected an integer, got '" + s + "'");
  if (v < -1000000000L || v > 1000000000L) fail(e, "integer out of range");
  return static_cast<int>(v);
}

bool boolean(const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  fail(e, "expected true or false, got '" + e.value + "'");
}

template <typename T>
T choice(const Entry& e, const std::vector<std::pair<std::string, T>>& options) {
  std::string names;
  for (const auto& [name, v] : options) {
    if (e.value == name) return v;
    names += (names.empty() ? "" : ", ") + name;
  }
  fail(e, "expected one of " + names + ", got '" + e.value + "'");
}

const std::vector<std::pair<std::string, SweepVariable>>& sweep_variables() {
  static const std::vector<std::pair<std::string, SweepVariable>> v{{"distance", SweepVariable::Distance},
                                                                     {"omega_a", SweepVariable::OmegaA},
                                                                     {"phonon_cutoff", SweepVariable::PhononCutoff},
                                                                     {"expansion_coeff", SweepVariable::ExpansionCoeff}};
  return v;
}

const UnitTable& grid_units(SweepVariable v) {
  switch (v) {
    case SweepVariable::Distance: return length_units();
    case SweepVariable::OmegaA: return frequency_units();
    default: return dimensionless();
  }
}

SweepVariable default_variable(Mode m) { return m == Mode::SweepFidelity ? SweepVariable::OmegaA : SweepVariable::Distance; }

std::vector<double> grid_values(const Entry& e, SweepVariable var) {
  // "a, b, c unit": the unit follows the last value and applies to all.
  std::vector<std::string> parts;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  if (parts.empty()) fail(e, "empty grid");
  const auto [last, unit] = split_number(e, parts.back());
  (void)last;
  std::vector<double> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::string p = parts[i];
    if (i + 1 < parts.size()) {
      auto [v, u] = split_number(e, p);
      if (!u.empty()) fail(e, "put the unit after the last grid value only");
      p = sci(v) + (unit.empty() ? "" : " " + unit);
    }
    out.push_back(quantity(e, p, grid_units(var)));
  }
  return out;
}

std::vector<Entry> lex(const std::string& text) {
  std::vector<Entry> entries;
  std::map<std::string, int> seen;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (line == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    Entry e{trim(content.substr(0, eq)), trim(content.substr(eq + 1)), line, "line " + std::to_string(line)};
    if (!valid_key(e.key)) throw ConfigError("malformed key '" + e.key + "' (expected lower_snake)", line);
    if (e.value.empty()) throw ConfigError(e.key + ": missing value", line);
    if (auto it = seen.find(e.key); it != seen.end()) {
      throw ConfigError(e.key + ": duplicate key (first set on line " + std::to_string(it->second) + ")", line);
    }
    seen[e.key] = line;
    entries.push_back(std::move(e));
  }
  return entries;
}

Entry lex_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--set " + text + ": expected key=value", 0);
  Entry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), 0, "--set " + text};
  if (!valid_key(e.key)) throw ConfigError("--set " + text + ": malformed key '" + e.key + "'", 0);
  if (e.value.empty()) throw ConfigError("--set " + text + ": missing value", 0);
  return e;
}

struct Builder {
  RunConfig cfg;
  std::optional<Entry> grid_entry;
  std::optional<Entry> start_entry, stop_entry, points_entry;
  std::optional<Entry> first_invalid;  // first entry after which the parameters stopped validating

  void apply(const Entry& e) {
    auto& p = cfg.params;
    static const std::map<std::string, std::function<void(Builder&, const Entry&)>> handlers{
        {"mode", [](Builder& b, const Entry& e) {
           try {
             b.cfg.mode = parse_mode(e.value);
           } catch (const ConfigError& err) {
             fail(e, err.what());
           }
         }},
        {"omega_a", [](Builder& b, const Entry& e) { b.cfg.params.atom_rabi = quantity(e, frequency_units()); }},
        {"omega_ion", [](Builder& b, const Entry& e) { b.cfg.params.ion_rabi = quantity(e, frequency_units()); }},
        {"trap_freq", [](Builder& b, const Entry& e) { b.cfg.params.trap_frequency = quantity(e, frequency_units()); }},
        {"qubit_freq", [](Builder& b, const Entry& e) { b.cfg.params.qubit_frequency = quantity(e, frequency_units()); }},
        {"delta_r", [](Builder& b, const Entry& e) {
           if (e.value == "resonant") {
             b.cfg.params.rydberg_detuning.reset();
           } else {
             b.cfg.params.rydberg_detuning = quantity(e, frequency_units());
           }
         }},
        {"phi", [](Builder& b, const Entry& e) { b.cfg.params.sideband_phase = quantity(e, angle_units()); }},
        {"x_a", [](Builder& b, const Entry& e) { b.cfg.params.distance = quantity(e, length_units()); }},
        {"eta", [](Builder& b, const Entry& e) { b.cfg.params.lamb_dicke = quantity(e, dimensionless()); }},
        {"ion_mass", [](Builder& b, const Entry& e) { b.cfg.params.ion_mass = quantity(e, mass_units()); }},
        {"c4", [](Builder& b, const Entry& e) {
           auto [v, unit] = split_number(e, e.value);
           if (unit == "au") {
             b.cfg.c4_atomic_units = true;
           } else if (unit == "J*m^4") {
             b.cfg.c4_atomic_units = false;
           } else {
             fail(e, unit.empty() ? "missing unit (expected au, J*m^4)"
                                  : "unit '" + unit + "' does not match (expected au, J*m^4)");
           }
           b.cfg.c4_value = v;
         }},
        {"c4_scale", [](Builder& b, const Entry& e) {
           b.cfg.c4_scale = quantity(e, dimensionless());
           if (!(b.cfg.c4_scale > 0.0)) fail(e, "must be positive");
         }},
        {"n_cutoff", [](Builder& b, const Entry& e) { b.cfg.params.phonon_cutoff = integer(e); }},
        {"rydberg_lifetime", [](Builder& b, const Entry& e) { b.cfg.params.rydberg_lifetime = quantity(e, time_units()); }},
        {"max_step", [](Builder& b, const Entry& e) {
           b.cfg.numeric.atom_max_step = quantity(e, time_units());
           if (!(b.cfg.numeric.atom_max_step > 0.0)) fail(e, "must be positive");
         }},
        {"steps_per_trap_period", [](Builder& b, const Entry& e) {
           b.cfg.numeric.steps_per_trap_period = integer(e);
           if (b.cfg.numeric.steps_per_trap_period < 2) fail(e, "must be at least 2");
         }},
        {"norm_tolerance", [](Builder& b, const Entry& e) {
           b.cfg.numeric.norm_tolerance = quantity(e, dimensionless());
           if (!(b.cfg.numeric.norm_tolerance > 0.0)) fail(e, "must be positive");
         }},
        {"expansion_order2_coeff", [](Builder& b, const Entry& e) {
           b.cfg.params.expansion_order2 = choice<ExpansionCoefficient>(
               e, {{"truncated", ExpansionCoefficient::Truncated}, {"taylor", ExpansionCoefficient::Taylor},
                   {"4", ExpansionCoefficient::Truncated}, {"10", ExpansionCoefficient::Taylor}});
         }},
        {"coupling_prefactors", [](Builder& b, const Entry& e) {
           b.cfg.params.coupling_prefactors = choice<CouplingPrefactors>(
               e, {{"consistent", CouplingPrefactors::Consistent}, {"literal", CouplingPrefactors::Literal}});
         }},
        {"step2_duration_mode", [](Builder& b, const Entry& e) {
           b.cfg.options.step2_duration = choice<Step2Duration>(
               e, {{"full_transfer", Step2Duration::FullTransfer}, {"literal", Step2Duration::Literal}});
         }},
        {"step2_model", [](Builder& b, const Entry& e) {
           b.cfg.options.step2_model =
               choice<Step2Model>(e, {{"rotating", Step2Model::RotatingFrame}, {"microscopic", Step2Model::Microscopic}});
         }},
        {"microscopic_cutoff", [](Builder& b, const Entry& e) {
           b.cfg.options.microscopic_cutoff = integer(e);
           if (b.cfg.options.microscopic_cutoff < 2) fail(e, "must be at least 2");
         }},
        {"force_zero_shift", [](Builder& b, const Entry& e) { b.cfg.options.force_zero_shift = boolean(e); }},
        {"phase_search", [](Builder& b, const Entry& e) { b.cfg.options.phase_search = boolean(e); }},
        {"sweep_variable", [](Builder& b, const Entry& e) {
           b.cfg.sweep_variable = choice<SweepVariable>(e, sweep_variables());
         }},
        {"sweep_grid", [](Builder& b, const Entry& e) { b.grid_entry = e; }},
        {"sweep_start", [](Builder& b, const Entry& e) { b.start_entry = e; }},
        {"sweep_stop", [](Builder& b, const Entry& e) { b.stop_entry = e; }},
        {"sweep_points", [](Builder& b, const Entry& e) { b.points_entry = e; }},
        {"sweep_workers", [](Builder& b, const Entry& e) {
           b.cfg.sweep_workers = integer(e);
           if (b.cfg.sweep_workers < 0) fail(e, "must be non-negative");
         }},
        {"trace_input", [](Builder& b, const Entry& e) {
           b.cfg.trace_input = choice<int>(e, {{"00", 0}, {"01", 1}, {"10", 2}, {"11", 3}});
         }},
        {"trace_samples", [](Builder& b, const Entry& e) {
           b.cfg.trace_samples = integer(e);
           if (b.cfg.trace_samples < 1) fail(e, "must be at least 1");
         }},
        {"output", [](Builder& b, const Entry& e) { b.cfg.output_path = e.value; }},
    };
    auto it = handlers.find(e.key);
    if (it == handlers.end()) fail(e, "unknown key");
    it->second(*this, e);

    p.c4 = cfg.c4_atomic_units ? convert_c4(cfg.c4_value, cfg.c4_scale) : cfg.c4_value;
    if (!first_invalid) {
      try {
        p.validate();
      } catch (const PhysicsError&) {
        first_invalid = e;
      }
    } else {
      try {
        p.validate();
        first_invalid.reset();
      } catch (const PhysicsError&) {
      }
    }
  }

  RunConfig finish() {
    try {
      cfg.params.validate();
    } catch (const PhysicsError& err) {
      if (first_invalid) fail(*first_invalid, err.what());
      throw ConfigError(err.what(), 0);
    }
    const SweepVariable var = cfg.sweep_variable.value_or(default_variable(cfg.mode));
    const bool range = start_entry || stop_entry || points_entry;
    if (grid_entry && range) fail(*grid_entry, "conflicts with sweep_start/sweep_stop/sweep_points");
    if (grid_entry) cfg.sweep_grid = grid_values(*grid_entry, var);
    if (range) {
      if (!(start_entry && stop_entry && points_entry)) {
        const Entry& any = start_entry ? *start_entry : stop_entry ? *stop_entry : *points_entry;
        fail(any, "sweep_start, sweep_stop and sweep_points must be given together");
      }
      const int points = integer(*points_entry);
      if (points < 1) fail(*points_entry, "must be at least 1");
      cfg.sweep_grid = linear_grid(quantity(*start_entry, grid_units(var)), quantity(*stop_entry, grid_units(var)), points);
    }
    if (!cfg.sweep_grid.empty()) {
      SweepSpec spec;
      spec.variable = var;
      spec.grid = cfg.sweep_grid;
      try {
        spec.validate();
      } catch (const PhysicsError& err) {
        fail(grid_entry ? *grid_entry : *start_entry, err.what());
      }
    }
    return cfg;
  }
};

// Atomic output: the file appears only once fully written.
class OutputFile {
 public:
  explicit OutputFile(std::string path) : path_(std::move(path)), tmp_(path_ + ".partial") {
    stream_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!stream_) throw IoError("cannot open '" + tmp_ + "' for writing");
  }
  ~OutputFile() {
    if (!committed_) {
      stream_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }
  std::ostream& stream() { return stream_; }
  void commit() {
    stream_.close();
    if (!stream_) throw IoError("write to '" + tmp_ + "' failed");
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) throw IoError("cannot move '" + tmp_ + "' to '" + path_ + "': " + ec.message());
    committed_ = true;
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream stream_;
  bool committed_ = false;
};

void emit(const std::optional<std::string>& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (!path) {
    body(fallback);
    return;
  }
  OutputFile f(*path);
  body(f.stream());
  f.commit();
}

std::vector<std::string> provenance(const RunConfig& config) {
  std::vector<std::string> lines{"phonon-gate " + std::string(kVersion)};
  std::stringstream ss(serialize_config(config));
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

void write_provenance(std::ostream& out, const RunConfig& config) {
  for (const auto& l : provenance(config)) out << "# " << l << '\n';
}

constexpr double kReferenceFidelity = 0.8994;
constexpr double kReferenceTolerance = 0.03;

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Gate: return "gate";
    case Mode::SweepShift: return "sweep-shift";
    case Mode::SweepFidelity: return "sweep-fidelity";
    case Mode::Traces: return "traces";
    case Mode::Check: return "check";
  }
  return "gate";
}

Mode parse_mode(const std::string& name) {
  for (Mode m : {Mode::Gate, Mode::SweepShift, Mode::SweepFidelity, Mode::Traces, Mode::Check}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + name + "' (expected gate, sweep-shift, sweep-fidelity, traces, check)", 0);
}

RunConfig parse_config(const std::string& text) { return parse_config(text, {}); }

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  Builder b;
  std::map<std::string, std::size_t> index;
  std::vector<Entry> entries = lex(text);
  for (std::size_t i = 0; i < entries.size(); ++i) index[entries[i].key] = i;
  for (const auto& o : overrides) {
    Entry e = lex_override(o);
    if (auto it = index.find(e.key); it != index.end()) {
      entries[it->second] = e;
    } else {
      index[e.key] = entries.size();
      entries.push_back(e);
    }
  }
  for (const auto& e : entries) b.apply(e);
  return b.finish();
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "mode = " << to_string(c.mode) << '\n';
  const auto& p = c.params;
  out << "ion_mass = " << sci(p.ion_mass) << " kg\n";
  out << "trap_freq = " << sci(p.trap_frequency) << " rad/s\n";
  out << "qubit_freq = " << sci(p.qubit_frequency) << " rad/s\n";
  out << "c4 = " << sci(c.c4_value) << (c.c4_atomic_units ? " au" : " J*m^4") << '\n';
  out << "c4_scale = " << sci(c.c4_scale) << '\n';
  out << "x_a = " << sci(p.distance) << " m\n";
  out << "eta = " << sci(p.lamb_dicke) << '\n';
  out << "omega_ion = " << sci(p.ion_rabi) << " rad/s\n";
  out << "omega_a = " << sci(p.atom_rabi) << " rad/s\n";
  out << "delta_r = " << (p.rydberg_detuning ? sci(*p.rydberg_detuning) + " rad/s" : std::string("resonant")) << '\n';
  out << "phi = " << sci(p.sideband_phase) << " rad\n";
  out << "n_cutoff = " << p.phonon_cutoff << '\n';
  out << "rydberg_lifetime = " << sci(p.rydberg_lifetime) << " s\n";
  out << "expansion_order2_coeff = " << (p.expansion_order2 == ExpansionCoefficient::Truncated ? "truncated" : "taylor") << '\n';
  out << "coupling_prefactors = " << (p.coupling_prefactors == CouplingPrefactors::Consistent ? "consistent" : "literal")
      << '\n';
  out << "max_step = " << sci(c.numeric.atom_max_step) << " s\n";
  out << "steps_per_trap_period = " << c.numeric.steps_per_trap_period << '\n';
  out << "norm_tolerance = " << sci(c.numeric.norm_tolerance) << '\n';
  out << "step2_duration_mode = "
      << (c.options.step2_duration == Step2Duration::FullTransfer ? "full_transfer" : "literal") << '\n';
  out << "step2_model = " << (c.options.step2_model == Step2Model::RotatingFrame ? "rotating" : "microscopic") << '\n';
  out << "microscopic_cutoff = " << c.options.microscopic_cutoff << '\n';
  out << "force_zero_shift = " << (c.options.force_zero_shift ? "true" : "false") << '\n';
  out << "phase_search = " << (c.options.phase_search ? "true" : "false") << '\n';
  if (c.sweep_variable) out << "sweep_variable = " << to_string(*c.sweep_variable) << '\n';
  if (!c.sweep_grid.empty()) {
    const SweepVariable var = c.sweep_variable.value_or(default_variable(c.mode));
    out << "sweep_grid = ";
    for (std::size_t i = 0; i < c.sweep_grid.size(); ++i) out << (i ? ", " : "") << sci(c.sweep_grid[i]);
    if (var == SweepVariable::Distance) out << " m";
    if (var == SweepVariable::OmegaA) out << " rad/s";
    out << '\n';
  }
  out << "sweep_workers = " << c.sweep_workers << '\n';
  out << "trace_input = " << logical::label(c.trace_input) << '\n';
  out << "trace_samples = " << c.trace_samples << '\n';
  if (c.output_path) out << "output = " << *c.output_path << '\n';
  return out.str();
}

SweepSpec sweep_spec(const RunConfig& c) {
  SweepSpec s;
  s.variable = c.sweep_variable.value_or(default_variable(c.mode));
  s.fixed = c.params;
  s.numeric = c.numeric;
  s.options = c.options;
  s.workers = c.sweep_workers;
  s.grid = c.sweep_grid;
  if (s.grid.empty()) {
    switch (s.variable) {
      case SweepVariable::Distance: s.grid = default_distance_grid(); break;
      case SweepVariable::OmegaA: s.grid = default_omega_a_grid(); break;
      case SweepVariable::PhononCutoff: s.grid = {8, 10, 12, 16}; break;
      case SweepVariable::ExpansionCoeff: s.grid = {4, 10}; break;
    }
  }
  return s;
}

std::vector<CheckResult> run_checks(const RunConfig& config) {
  const PhysicalParams& p = config.params;
  std::vector<CheckResult> out;
  auto record = [&](std::string name, double value, double threshold, bool passed, std::string detail = {}) {
    out.push_back({std::move(name), passed, value, threshold, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      record(name, NAN, NAN, false, e.what());
    }
  };

  guarded("interaction_frame", [&] {
    const auto f = interaction_frame_check(p);
    record("interaction_frame", f.sideband_discrepancy, f.bound, f.passed,
           "carrier-retained discrepancy " + sci(f.carrier_discrepancy) + " (AC Stark shift " +
               sci(units::to_mhz(f.stark_shift) * 1e3) + " kHz)");
  });

  const CnotProtocol protocol(p, config.numeric, config.options);
  const int n = p.phonon_cutoff;

  guarded("sideband_closed_form", [&] {
    const auto sb = red_sideband(p, protocol.blockade_detuning() != 0.0 ? std::optional<TrapShift>(protocol.shift())
                                                                        : std::nullopt);
    const Matrix& h = sb.frame.entries();
    double worst = 0.0;
    for (int k = 1; k < n; ++k) {
      const std::array<Eigen::Index, 2> idx{k, n + k - 1};  // |0_i, k>, |1_i, k-1>
      Matrix block(2, 2);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) block(r, c) = h(idx[r], idx[c]);
      const Matrix numeric = HermitianExponential(block).propagator(protocol.ion_pulse_duration());
      const auto closed = analytic_sideband_unitary(sb.coupling * std::sqrt(static_cast<double>(k)), sb.detuning,
                                                    protocol.ion_pulse_duration(), sb.phase);
      worst = std::max(worst, max_abs(numeric - closed.entries()));
    }
    record("sideband_closed_form", worst, 1e-12, worst < 1e-12);
  });

  guarded("atom_closed_form", [&] {
    const auto closed = analytic_atom_unitary(p, protocol.atom_pulse_duration());
    double worst = 0.0;
    for (int k = 0; k < logical::kCount; ++k) {
      const auto psi = logical::state(k, n);
      const Vector numeric = protocol.run_step1(psi).final_state.amplitudes();
      const Vector analytic = closed.unitary.entries() * psi.amplitudes();
      worst = std::max(worst, 1.0 - std::norm(analytic.dot(numeric)));
    }
    record("atom_closed_form", worst, 1e-3, worst < 1e-3,
           "validity ratio " + sci(closed.validity_ratio) + (closed.validity_warning ? " (warning)" : ""));
  });

  guarded("step_halving", [&] {
    NumericOptions fine = config.numeric;
    fine.atom_max_step *= 0.5;
    const CnotProtocol refined(p, fine, config.options);
    double worst = 0.0;
    for (int k = 0; k < logical::kCount; ++k) {
      const auto psi = logical::state(k, n);
      const Vector a = protocol.run_step1(psi).final_state.amplitudes();
      const Vector b = refined.run_step1(psi).final_state.amplitudes();
      worst = std::max(worst, (a - b).norm());
    }
    record("step_halving", worst, 1e-6, worst < 1e-6);
  });

  guarded("gate_norm", [&] {
    const auto r = protocol.run();
    if (r.failed) throw NumericError(r.failure);
    record("gate_norm", r.norm_drift, 1e-9, r.norm_drift < 1e-9);
  });

  guarded("cutoff_convergence", [&] {
    PhysicalParams small = p, large = p;
    small.phonon_cutoff = 8;
    large.phonon_cutoff = 16;
    const auto a = CnotProtocol(small, config.numeric, config.options).run();
    const auto b = CnotProtocol(large, config.numeric, config.options).run();
    if (a.failed || b.failed) throw NumericError(a.failed ? a.failure : b.failure);
    const double diff = std::max(std::abs(a.fidelity.average - b.fidelity.average),
                                 std::abs(a.fidelity.process - b.fidelity.process));
    record("cutoff_convergence", diff, 1e-4, diff < 1e-4, "N = 8 vs 16");
  });

  guarded("step2_atom_populations", [&] {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(full_dimension(n)));
    v(static_cast<Eigen::Index>(BasisIndex{atom::kGround0, 0, 1}.flatten(n))) = std::sqrt(0.2);
    v(static_cast<Eigen::Index>(BasisIndex{atom::kGround1, 1, 0}.flatten(n))) = std::sqrt(0.3);
    v(static_cast<Eigen::Index>(BasisIndex{atom::kRydberg, 0, 1}.flatten(n))) = std::sqrt(0.5);
    const StateVector psi(v, n);
    const auto r = protocol.run_step2(psi);
    double worst = 0.0;
    for (int a = 0; a < kAtomDim; ++a) {
      worst = std::max(worst, std::abs(r.final_state.atom_population(a) - psi.atom_population(a)));
    }
    record("step2_atom_populations", worst, 1e-9, worst < 1e-9);
  });

  guarded("step1_decoupling", [&] {
    std::vector<BasisIndex> rydberg;
    for (int i = 0; i < kIonDim; ++i)
      for (int k = 0; k < n; ++k) rydberg.push_back({atom::kRydberg, i, k});
    const auto r = protocol.run_step1(logical::state(2, n), rydberg, 50);
    double worst = 0.0;
    for (const auto& s : r.samples)
      for (const auto& a : s.amplitudes) worst = std::max(worst, std::abs(a));
    record("step1_decoupling", worst, 1e-12, worst < 1e-12, "input |1,01>");
  });

  guarded("blockade_bound", [&] {
    const auto b = protocol.blocked_branch_profile();
    const double ratio = b.rabi_bound > 0.0 ? b.max_transfer / b.rabi_bound : INFINITY;
    record("blockade_bound", ratio, 1.5, ratio <= 1.5 && ratio >= 1.0 / 1.5,
           "max transfer " + sci(b.max_transfer) + ", Rabi bound " + sci(b.rabi_bound));
  });
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const std::ios_base::failure*>(&e)) return kExitIo;
  if (dynamic_cast<const PhysicsError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e)) {
    return kExitPhysics;
  }
  return kExitNumeric;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.mode) {
      case Mode::Gate: {
        const auto report = CnotProtocol(config.params, config.numeric, config.options).run();
        const bool avg_closer = std::abs(report.fidelity.average - kReferenceFidelity) <=
                                std::abs(report.fidelity.process - kReferenceFidelity);
        emit(config.output_path, out, [&](std::ostream& o) {
          write_provenance(o, config);
          write_gate_report(o, report);
          o << "reference_fidelity = " << kReferenceFidelity << '\n';
          o << "reference_tolerance = " << kReferenceTolerance << '\n';
          o << "closest_definition = " << (avg_closer ? "average" : "process") << '\n';
        });
        if (config.output_path) {
          emit(*config.output_path + ".truth_table.csv", out, [&](std::ostream& o) {
            write_provenance(o, config);
            write_truth_table_csv(o, report);
          });
        }
        if (report.failed) {
          err << "gate failed: " << report.failure << '\n';
          return kExitNumeric;
        }
        return kExitOk;
      }
      case Mode::SweepShift:
      case Mode::SweepFidelity: {
        const SweepSpec spec = sweep_spec(config);
        SweepResult r = config.mode == Mode::SweepShift ? sweep_trap_shift(spec) : sweep_gate(spec);
        r.provenance = provenance(config);
        emit(config.output_path, out, [&](std::ostream& o) { write_sweep_csv(o, r); });
        if (config.mode == Mode::SweepFidelity) {
          const auto bad = std::count_if(r.rows.begin(), r.rows.end(), [](const SweepRow& row) { return !row.valid; });
          if (bad > 0) {
            err << bad << " sweep point(s) failed; see the flag column\n";
            return kExitNumeric;
          }
        }
        return kExitOk;
      }
      case Mode::Traces: {
        TraceResult r = amplitude_traces(config.params, config.trace_input, config.trace_samples, config.numeric,
                                         config.options);
        auto lines = provenance(config);
        lines.push_back("time_axis = tau is t / T_step within each step");
        r.provenance = std::move(lines);
        emit(config.output_path, out, [&](std::ostream& o) { write_trace_csv(o, r); });
        return kExitOk;
      }
      case Mode::Check: {
        const auto checks = run_checks(config);
        bool all = true;
        emit(config.output_path, out, [&](std::ostream& o) {
          write_provenance(o, config);
          for (const auto& c : checks) {
            all = all && c.passed;
            o << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << sci(c.value) << " threshold=" << sci(c.threshold);
            if (!c.detail.empty()) o << " (" << c.detail << ')';
            o << '\n';
          }
        });
        return all ? kExitOk : kExitNumeric;
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace phonon_gate
