#include <doctest.h>

#include "test_helpers.hpp"
#include "zprobe/calib.hpp"

using namespace zprobe;
using helpers::rel_err;
using helpers::TestRng;

namespace {

FrequencyGrid small_grid() { return helpers::sweep_grid(21); }

StandardsTriple exact_standards(const AbcdNetwork& n, ReferenceImpedance z0,
                                double r_load = 50.0) {
  StandardsTriple s;
  s.gamma_open = reflection_from_impedance(input_impedance(n, open_load(n.grid)), z0);
  s.gamma_short =
      reflection_from_impedance(input_impedance(n, constant_trace(n.grid, Complex(0, 0))), z0);
  s.gamma_load = reflection_from_impedance(
      input_impedance(n, constant_trace(n.grid, Complex(r_load, 0))), z0);
  return s;
}

}  // namespace

TEST_CASE("forward coefficients from known networks") {
  const FrequencyGrid g = small_grid();

  SUBCASE("identity network") {
    const CalibrationSet cal = k_from_abcd(AbcdNetwork::identity(g));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      CHECK(rel_err(cal.k1[i], Complex(-50, 0)) < 1e-15);
      CHECK(rel_err(cal.k2[i], Complex(-50, 0)) < 1e-15);
      CHECK(rel_err(cal.k3[i], Complex(-1, 0)) < 1e-15);
      CHECK(cal.flags[i] == PointStatus::ok);
    }
  }

  SUBCASE("series 50 ohm") {
    const CalibrationSet cal = k_from_abcd(make_series(g, Complex(50, 0)));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      CHECK(rel_err(cal.k1[i], Complex(-100, 0)) < 1e-15);
      CHECK(std::abs(cal.k2[i]) < 1e-15);
      CHECK(rel_err(cal.k3[i], Complex(-1, 0)) < 1e-15);
    }
  }

  SUBCASE("ideal transformer n = 2") {
    const CalibrationSet cal = k_from_abcd(make_transformer(g, 2.0));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      CHECK(rel_err(cal.k1[i], Complex(-12.5, 0)) < 1e-15);
      CHECK(rel_err(cal.k2[i], Complex(-12.5, 0)) < 1e-15);
      CHECK(rel_err(cal.k3[i], Complex(-1, 0)) < 1e-15);
    }
  }

  SUBCASE("k3 is -1 for any pure transformer ratio") {
    for (double n : {0.5, 1.0, 2.0, 10.0}) {
      const CalibrationSet cal = k_from_abcd(make_transformer(g, n));
      for (Eigen::Index i = 0; i < g.size(); ++i)
        CHECK(rel_err(cal.k3[i], Complex(-1, 0)) < 1e-15);
    }
  }
}

TEST_CASE("OSL solve on ideal standards") {
  const FrequencyGrid g = small_grid();
  StandardsTriple s;
  s.gamma_open = constant_trace(g, Complex(1, 0));
  s.gamma_short = constant_trace(g, Complex(-1, 0));
  s.gamma_load = constant_trace(g, Complex(0, 0));

  const CalibrationSet cal = solve_osl(s, 50.0);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    CHECK(rel_err(cal.k1[i], Complex(-50, 0)) < 1e-15);
    CHECK(rel_err(cal.k2[i], Complex(-50, 0)) < 1e-15);
    CHECK(cal.k3[i] == Complex(-1, 0));
    CHECK(cal.flags[i] == PointStatus::ok);
  }
}

TEST_CASE("OSL solve flags degenerate points without failing the sweep") {
  const FrequencyGrid g = small_grid();
  StandardsTriple s;
  s.gamma_open = constant_trace(g, Complex(1, 0));
  s.gamma_short = constant_trace(g, Complex(-1, 0));
  Eigen::ArrayXcd load = Eigen::ArrayXcd::Zero(g.size());
  load[4] = Complex(-1, 0);  // collides with the short standard here
  s.gamma_load = ComplexTrace(g, load);

  const CalibrationSet cal = solve_osl(s, 50.0);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (i == 4) {
      CHECK(cal.flags[i] == PointStatus::ill_conditioned);
    } else {
      CHECK(cal.flags[i] == PointStatus::ok);
      CHECK(rel_err(cal.k1[i], Complex(-50, 0)) < 1e-15);
    }
  }
}

TEST_CASE("k3 is a bitwise negation of the open standard") {
  const FrequencyGrid g = small_grid();
  TestRng rng(3);
  Eigen::ArrayXcd open_vals(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    open_vals[i] = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
  StandardsTriple s;
  s.gamma_open = ComplexTrace(g, open_vals);
  s.gamma_short = constant_trace(g, Complex(-1, 0));
  s.gamma_load = constant_trace(g, Complex(0, 0));

  const CalibrationSet cal = solve_osl(s, 50.0);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    CHECK(cal.k3[i].real() == -open_vals[i].real());
    CHECK(cal.k3[i].imag() == -open_vals[i].imag());
  }
}

TEST_CASE("OSL solve equals the forward route on synthesized standards") {
  const FrequencyGrid g = small_grid();
  TestRng rng(99);
  const ReferenceImpedance z0;
  long compared = 0, total = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const AbcdNetwork n = helpers::random_reciprocal_network(rng, g, 1.0, 1e2);
    const CalibrationSet forward = k_from_abcd(n, z0);
    const StandardsTriple s = exact_standards(n, z0);
    const CalibrationSet solved = solve_osl(s, 50.0, z0);
    const ConditioningReport rep = conditioning_report(solved, s);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      ++total;
      // The identity is numerically meaningful only where the three
      // standards actually separate on the complex plane.
      if (forward.flags[i] != PointStatus::ok || solved.flags[i] != PointStatus::ok) continue;
      if (rep.min_pairwise_distance[i] < 1e-4) continue;
      ++compared;
      CHECK(rel_err(solved.k1[i], forward.k1[i]) < 1e-9);
      CHECK(rel_err(solved.k2[i], forward.k2[i]) < 1e-9);
      CHECK(rel_err(solved.k3[i], forward.k3[i]) < 1e-9);
    }
  }
  CHECK(compared > total / 3);  // the rest are attenuated past the separation guard
}

TEST_CASE("generalized load resistance") {
  const FrequencyGrid g = small_grid();
  const AbcdNetwork n = make_series(g, Complex(25, 10));
  const ReferenceImpedance z0;
  const CalibrationSet forward = k_from_abcd(n, z0);
  const CalibrationSet solved = solve_osl(exact_standards(n, z0, 75.0), 75.0, z0);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    CHECK(rel_err(solved.k1[i], forward.k1[i]) < 1e-12);
    CHECK(rel_err(solved.k2[i], forward.k2[i]) < 1e-12);
  }
  CHECK_THROWS_AS(solve_osl(exact_standards(n, z0), -1.0), ValidationError);
}

TEST_CASE("conditioning report") {
  const FrequencyGrid g = small_grid();

  SUBCASE("ideal standards separate by exactly one") {
    StandardsTriple s;
    s.gamma_open = constant_trace(g, Complex(1, 0));
    s.gamma_short = constant_trace(g, Complex(-1, 0));
    s.gamma_load = constant_trace(g, Complex(0, 0));
    const CalibrationSet cal = solve_osl(s, 50.0);
    const ConditioningReport rep = conditioning_report(cal, s);
    CHECK(rep.flagged_count == 0);
    CHECK(rep.flagged_bands.empty());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      CHECK(rep.min_pairwise_distance[i] == doctest::Approx(1.0));
      CHECK(rep.load_short_distance[i] == doctest::Approx(1.0));
      CHECK(rep.open_load_distance[i] == doctest::Approx(1.0));
    }
  }

  SUBCASE("identical standards flag every point") {
    StandardsTriple s;
    s.gamma_open = constant_trace(g, Complex(0.5, 0.5));
    s.gamma_short = constant_trace(g, Complex(0.5, 0.5));
    s.gamma_load = constant_trace(g, Complex(0.5, 0.5));
    const CalibrationSet cal = solve_osl(s, 50.0);
    const ConditioningReport rep = conditioning_report(cal, s);
    CHECK(rep.flagged_count == g.size());
    REQUIRE(rep.flagged_bands.size() == 1);
    CHECK(rep.flagged_bands[0].f_lo_hz == doctest::Approx(g.front()));
    CHECK(rep.flagged_bands[0].f_hi_hz == doctest::Approx(g.back()));
  }

  SUBCASE("standards through a heavy attenuator cluster and flag") {
    // A huge series resistance isolates the standards plane; all three
    // reflections collapse toward +1.
    const AbcdNetwork atten = make_series(g, Complex(1e9, 0));
    const StandardsTriple s = exact_standards(atten, ReferenceImpedance());
    const CalibrationSet cal = solve_osl(s, 50.0);
    const ConditioningReport rep = conditioning_report(cal, s);
    CHECK(rep.flagged_count == g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
      CHECK(rep.min_pairwise_distance[i] < kDefaultConditioningFloor);
  }
}

TEST_CASE("standards validation") {
  const FrequencyGrid g = small_grid();
  StandardsTriple s;
  s.gamma_open = constant_trace(g, Complex(1, 0));
  s.gamma_short = constant_trace(g, Complex(-1, 0));
  s.gamma_load = constant_trace(FrequencyGrid::log_spaced(1e6, 2e6, 21), Complex(0, 0));
  CHECK_THROWS_AS(solve_osl(s, 50.0), ValidationError);
}
