#include "oracles.hpp"

#include "phonon_gate/errors.hpp"
#include "phonon_gate/sweep.hpp"
#include "phonon_gate/units.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <sstream>

using namespace phonon_gate;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SweepSpec distance_spec(std::vector<double> um) {
  SweepSpec s;
  s.variable = SweepVariable::Distance;
  for (double x : um) s.grid.push_back(units::um(x));
  s.workers = 1;
  return s;
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("grid helpers", "[sweep]") {
  const auto g = linear_grid(1.0, 2.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == 1.0);
  CHECK(g.back() == 2.0);
  CHECK_THAT(g[1], WithinRel(1.25, 1e-15));
  CHECK(linear_grid(3.0, 3.0, 1) == std::vector<double>{3.0});

  const auto d = default_distance_grid();
  CHECK(d.size() == 200);
  CHECK_THAT(d.front(), WithinRel(1.5e-6, 1e-12));
  CHECK_THAT(d.back(), WithinRel(5e-6, 1e-12));
  const auto w = default_omega_a_grid();
  REQUIRE(w.size() == 5);
  CHECK_THAT(w[0], WithinRel(2.0 * oracle::kPi * 0.25e9, 1e-12));
  CHECK_THAT(w[4], WithinRel(2.0 * oracle::kPi * 2e9, 1e-12));
}

TEST_CASE("grid validation", "[sweep]") {
  auto s = distance_spec({});
  CHECK_THROWS_AS(s.validate(), PhysicsError);
  s = distance_spec({2.0, 2.0});
  CHECK_THROWS_AS(s.validate(), PhysicsError);
  s = distance_spec({2.0, 3.0, 2.5});
  CHECK_THROWS_AS(s.validate(), PhysicsError);
  s = distance_spec({-1.0, 2.0});
  CHECK_THROWS_AS(s.validate(), PhysicsError);
  s = distance_spec({3.0, 2.0});  // decreasing is fine
  CHECK_NOTHROW(s.validate());
  s.grid = {std::nan("")};
  CHECK_THROWS_AS(s.validate(), PhysicsError);

  SweepSpec cut;
  cut.variable = SweepVariable::PhononCutoff;
  cut.grid = {4.0, 6.5};
  CHECK_THROWS_AS(cut.validate(), PhysicsError);
  cut.grid = {1.0, 4.0};
  CHECK_THROWS_AS(cut.validate(), PhysicsError);
  cut.grid = {4.0, 8.0};
  CHECK_NOTHROW(cut.validate());

  SweepSpec ec;
  ec.variable = SweepVariable::ExpansionCoeff;
  ec.grid = {4.0, 7.0};
  CHECK_THROWS_AS(ec.validate(), PhysicsError);
  ec.grid = {4.0, 10.0};
  CHECK_NOTHROW(ec.validate());

  SweepSpec wrong = distance_spec({2.0, 3.0});
  CHECK_THROWS_AS(sweep_fidelity_vs_omega_a(wrong), PhysicsError);
}

TEST_CASE("trap-shift sweep", "[sweep]") {
  const auto r = sweep_trap_shift(distance_spec({1.6, 2.57, 5.0, 10.0}));
  REQUIRE(r.rows.size() == 4);
  REQUIRE(r.columns == std::vector<std::string>{"omega_bar_MHz", "equilibrium_offset_um", "delta_MHz"});
  CHECK(r.input_column == "distance_um");

  SECTION("reference point") {
    const auto& row = r.rows[1];
    REQUIRE(row.valid);
    CHECK_THAT(row.values[0], WithinRel(10.61, 0.01));
  }
  SECTION("far away the trap is unperturbed") {
    CHECK_THAT(r.rows[3].values[0], WithinRel(11.2, 1e-3));
  }
  SECTION("rows agree with the direct evaluation") {
    for (std::size_t i = 1; i < 4; ++i) {
      auto p = PhysicalParams::defaults();
      p.distance = r.rows[i].input;
      const auto s = trap_shift(p);
      CHECK_THAT(r.rows[i].values[2], WithinRel(units::to_mhz(s.delta), 1e-3));
      CHECK_THAT(r.rows[i].values[0], WithinRel(units::to_mhz(s.omega_bar), 1e-12));
    }
  }
  SECTION("the shift decays with distance") {
    CHECK(std::abs(r.rows[3].values[2]) < std::abs(r.rows[2].values[2]));
    CHECK(std::abs(r.rows[2].values[2]) < std::abs(r.rows[1].values[2]));
  }
  SECTION("destabilized points are flagged, not dropped") {
    const auto& row = r.rows[0];
    CHECK_FALSE(row.valid);
    CHECK(row.flag.find("destabilized") != std::string::npos);
    for (double v : row.values) CHECK(std::isnan(v));
  }
}

TEST_CASE("no Rydberg interaction gives a flat shift column", "[sweep]") {
  auto s = distance_spec({2.0, 3.0, 4.0, 5.0});
  s.fixed.c4 = 0.0;
  const auto r = sweep_trap_shift(s);
  for (const auto& row : r.rows) {
    REQUIRE(row.valid);
    CHECK(row.values[2] == 0.0);
    CHECK(row.values[1] == 0.0);
    CHECK_THAT(row.values[0], WithinRel(units::to_mhz(s.fixed.trap_frequency), 1e-15));
  }
}

TEST_CASE("single-point grids and output selection", "[sweep]") {
  auto s = distance_spec({2.57});
  s.outputs = {"delta_MHz"};
  const auto r = sweep_trap_shift(s);
  REQUIRE(r.rows.size() == 1);
  REQUIRE(r.columns == std::vector<std::string>{"delta_MHz"});
  CHECK(r.rows[0].values.size() == 1);
  s.outputs = {"nonsense"};
  CHECK_THROWS_AS(sweep_trap_shift(s), PhysicsError);
}

TEST_CASE("worker count does not change results", "[sweep]") {
  auto s = distance_spec({});
  s.grid = default_distance_grid();
  const auto one = sweep_trap_shift(s);
  s.workers = 4;
  const auto four = sweep_trap_shift(s);
  REQUIRE(one.rows.size() == four.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].valid == four.rows[i].valid);
    for (std::size_t c = 0; c < one.columns.size(); ++c) {
      const double a = one.rows[i].values[c], b = four.rows[i].values[c];
      CHECK(((std::isnan(a) && std::isnan(b)) || bitwise_equal(a, b)));
    }
  }

  SweepSpec g;
  g.variable = SweepVariable::OmegaA;
  g.grid = {units::ghz(0.5), units::ghz(1.5)};
  g.fixed.phonon_cutoff = 8;
  g.workers = 1;
  const auto gate_one = sweep_gate(g);
  g.workers = 2;
  const auto gate_two = sweep_gate(g);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t c = 0; c < gate_one.columns.size(); ++c) {
      CHECK_THAT(gate_one.rows[i].values[c], WithinAbs(gate_two.rows[i].values[c], 1e-12));
    }
  }
  // Faster atomic drive, higher fidelity.
  CHECK(gate_one.rows[1].values[0] >= gate_one.rows[0].values[0]);
}

TEST_CASE("fidelity sweep over omega_a and other variables", "[sweep]") {
  SweepSpec s;
  s.variable = SweepVariable::OmegaA;
  s.grid = {units::ghz(0.5), units::ghz(1.0), units::ghz(1.5)};
  const auto r = sweep_fidelity_vs_omega_a(s);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.input_column == "omega_a_GHz");
  CHECK(r.rows[2].values[0] >= r.rows[0].values[0]);
  const auto direct = run_cnot(PhysicalParams::defaults());
  CHECK_THAT(r.rows[1].values[0], WithinAbs(direct.fidelity.average, 1e-12));
  CHECK_THAT(r.rows[1].values[1], WithinAbs(direct.fidelity.process, 1e-12));

  SweepSpec cut;
  cut.variable = SweepVariable::PhononCutoff;
  cut.grid = {8.0, 16.0};
  const auto rc = sweep_gate(cut);
  CHECK_THAT(rc.rows[0].values[0], WithinAbs(rc.rows[1].values[0], 1e-4));

  SweepSpec bad = distance_spec({1.6, 2.57});
  const auto rb = sweep_gate(bad);
  REQUIRE(rb.rows.size() == 2);
  CHECK_FALSE(rb.rows[0].valid);
  CHECK(std::isnan(rb.rows[0].values[0]));
  CHECK(rb.rows[1].valid);
}

TEST_CASE("amplitude traces", "[sweep]") {
  const auto p = PhysicalParams::defaults();
  const auto tracked = default_tracked_states();
  REQUIRE(tracked.size() == 6);
  CHECK(tracked[2] == BasisIndex{2, 0, 1});

  SECTION("control in |1> never reaches the Rydberg level") {
    const auto t = amplitude_traces(p, 2, 20);
    REQUIRE(t.samples.size() == 63);  // samples + 1 points per step
    for (const auto& s : t.samples) {
      if (s.step != 1) continue;
      CHECK(std::abs(s.amplitudes[2]) < 1e-12);
      CHECK(std::abs(s.amplitudes[3]) < 1e-12);
    }
  }
  SECTION("control in |0> visits |r,01> and comes back") {
    const auto t = amplitude_traces(p, 0, 40);
    double peak = 0.0;
    for (const auto& s : t.samples) {
      CHECK_THAT(s.norm, WithinAbs(1.0, 1e-9));
      CHECK(s.tau >= 0.0);
      CHECK(s.tau <= 1.0);
      if (s.step == 1) peak = std::max(peak, std::abs(s.amplitudes[2]));
    }
    CHECK(std::abs(t.samples.front().amplitudes[2]) == 0.0);
    CHECK(peak > 0.9);
    const auto& end = t.samples.back();
    CHECK(end.step == 3);
    CHECK(end.tau == 1.0);
    CHECK(std::abs(end.amplitudes[2]) < 0.15);
    CHECK(std::abs(end.amplitudes[0]) > 0.8);
  }
  SECTION("times are absolute and increasing") {
    const auto t = amplitude_traces(p, 1, 10);
    for (std::size_t i = 1; i < t.samples.size(); ++i) CHECK(t.samples[i].time >= t.samples[i - 1].time);
    CHECK_THAT(t.samples.back().time, WithinRel(2 * 0.5e-9 + 5e-6, 1e-12));
  }
  CHECK_THROWS(amplitude_traces(p, 4, 10));
}

TEST_CASE("csv output", "[sweep]") {
  const auto r = sweep_trap_shift(distance_spec({1.6, 2.57}));
  std::ostringstream os;
  write_sweep_csv(os, r);
  std::istringstream in(os.str());
  std::string line;
  int comments = 0;
  std::vector<std::string> data;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      ++comments;
    } else {
      data.push_back(line);
    }
  }
  CHECK(comments >= 5);
  REQUIRE(data.size() == 3);
  CHECK(data[0] == "distance_um,omega_bar_MHz,equilibrium_offset_um,delta_MHz,valid,flag");
  CHECK(data[1].rfind("1.6", 0) == 0);
  CHECK(data[1].find(",0,trap destabilized") != std::string::npos);
  CHECK(data[2].find(",1,") != std::string::npos);
  CHECK(os.str().find("# x_a = ") != std::string::npos);

  const auto t = amplitude_traces(PhysicalParams::defaults(), 0, 3);
  std::ostringstream ts;
  write_trace_csv(ts, t);
  const std::string text = ts.str();
  CHECK(text.find("step,tau,t_s,state,re,im,norm\n") != std::string::npos);
  // 4 points per step, 6 tracked states.
  const auto header = text.find("step,tau");
  CHECK(std::count(text.begin() + static_cast<std::ptrdiff_t>(header), text.end(), '\n') == 1 + 12 * 6);
}

TEST_CASE("parameter echo", "[sweep]") {
  const auto lines = parameter_echo(PhysicalParams::defaults(), {}, {});
  bool has_distance = false;
  for (const auto& l : lines) {
    CHECK(l.find(" = ") != std::string::npos);
    if (l.rfind("x_a = ", 0) == 0) has_distance = true;
  }
  CHECK(has_distance);
}
