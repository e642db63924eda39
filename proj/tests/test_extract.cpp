#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "zprobe/extract.hpp"

using namespace zprobe;
using helpers::rel_err;
using helpers::TestRng;

namespace {

FrequencyGrid small_grid() { return helpers::sweep_grid(21); }

CalibrationSet identity_cal(const FrequencyGrid& g) {
  return k_from_abcd(AbcdNetwork::identity(g));
}

ComplexTrace gamma_through(const AbcdNetwork& n, const ComplexTrace& z_load,
                           ReferenceImpedance z0 = ReferenceImpedance()) {
  return reflection_from_impedance(input_impedance(n, z_load), z0);
}

}  // namespace

TEST_CASE("extraction against the identity calibration") {
  const FrequencyGrid g = small_grid();
  const CalibrationSet cal = identity_cal(g);

  SUBCASE("matched gamma") {
    const ImpedanceTrace z = extract_impedance(constant_trace(g, Complex(0, 0)), cal);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      CHECK(z.status[i] == PointStatus::ok);
      CHECK(rel_err(z.z[i], Complex(50, 0)) < 1e-12);
    }
  }

  SUBCASE("gamma = 1/3 gives 100 ohm") {
    const ImpedanceTrace z =
        extract_impedance(constant_trace(g, Complex(1.0 / 3.0, 0)), cal);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      CHECK(rel_err(z.z[i], Complex(100, 0)) < 1e-12);
  }

  SUBCASE("gamma = 1 is the open singularity") {
    const ImpedanceTrace z = extract_impedance(constant_trace(g, Complex(1, 0)), cal);
    for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(z.status[i] == PointStatus::near_open);
  }
}

TEST_CASE("grid mismatch reports both grids") {
  const CalibrationSet cal = identity_cal(small_grid());
  const ComplexTrace other = constant_trace(FrequencyGrid::log_spaced(1e6, 2e6, 21), Complex(0, 0));
  CHECK_THROWS_WITH_AS(extract_impedance(other, cal),
                       doctest::Contains("does not match"), ValidationError);
  try {
    extract_impedance(other, cal);
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("21 points") != std::string::npos);
    CHECK(msg.find("first difference") != std::string::npos);
  }
}

TEST_CASE("calibration standards map to short, load, and open") {
  const FrequencyGrid g = small_grid();
  TestRng rng(17);
  const ReferenceImpedance z0;
  for (int trial = 0; trial < 20; ++trial) {
    const AbcdNetwork n = build_chain(helpers::random_bench(rng, g));
    StandardsTriple s;
    s.gamma_open = gamma_through(n, open_load(g));
    s.gamma_short = gamma_through(n, constant_trace(g, Complex(0, 0)));
    s.gamma_load = gamma_through(n, constant_trace(g, Complex(50, 0)));
    const CalibrationSet cal = solve_osl(s, 50.0, z0);

    const ImpedanceTrace z_short = extract_impedance(s.gamma_short, cal);
    const ImpedanceTrace z_load = extract_impedance(s.gamma_load, cal);
    const ImpedanceTrace z_open = extract_impedance(s.gamma_open, cal);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (cal.flags[i] != PointStatus::ok) continue;
      CHECK(std::abs(z_short.z[i]) <= 1e-9);
      CHECK(rel_err(z_load.z[i], Complex(50, 0)) <= 1e-9);
      CHECK(z_open.status[i] == PointStatus::near_open);
    }
  }
}

TEST_CASE("round-trip oracle through forward-computed calibrations") {
  const FrequencyGrid g = small_grid();
  TestRng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const AbcdNetwork n = build_chain(helpers::random_bench(rng, g));
    const CalibrationSet cal = k_from_abcd(n);

    Eigen::ArrayXcd dut(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
      dut[i] = Complex(rng.log_uniform(1e-1, 1e4), rng.uniform(-1e3, 1e3));
    const ComplexTrace z_dut(g, dut);

    const ImpedanceTrace back = extract_impedance(gamma_through(n, z_dut), cal);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (back.status[i] != PointStatus::ok) continue;
      CHECK(rel_err(back.z[i], dut[i]) < 1e-9);
    }
  }
}

TEST_CASE("extraction is a Mobius map: cross-ratio preservation") {
  const FrequencyGrid g = small_grid();
  TestRng rng(31);
  const AbcdNetwork n = helpers::random_reciprocal_network(rng, g, 1e-1, 1e3);
  const CalibrationSet cal = k_from_abcd(n);

  const Complex g1(0.0, 0.0), g2(1.0 / 3.0, 0.0), g3(-0.5, 0.1), g4(0.2, -0.3);
  const ImpedanceTrace z1 = extract_impedance(constant_trace(g, g1), cal);
  const ImpedanceTrace z2 = extract_impedance(constant_trace(g, g2), cal);
  const ImpedanceTrace z3 = extract_impedance(constant_trace(g, g3), cal);
  const ImpedanceTrace z4 = extract_impedance(constant_trace(g, g4), cal);

  const auto cross_ratio = [](Complex a, Complex b, Complex c, Complex d) {
    return ((a - c) * (b - d)) / ((a - d) * (b - c));
  };
  const Complex expected = cross_ratio(g1, g2, g3, g4);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (z1.status[i] != PointStatus::ok || z2.status[i] != PointStatus::ok ||
        z3.status[i] != PointStatus::ok || z4.status[i] != PointStatus::ok)
      continue;
    const Complex got = cross_ratio(z1.z[i], z2.z[i], z3.z[i], z4.z[i]);
    CHECK(rel_err(got, expected) < 1e-9);
  }
}

TEST_CASE("near-open flagging is monotonic in the denominator") {
  const FrequencyGrid g = small_grid();
  const CalibrationSet cal = identity_cal(g);  // k3 = -1, threshold 2e-9

  for (double eps : {1e-12, 1e-10, 5e-10}) {
    const ImpedanceTrace z = extract_impedance(constant_trace(g, Complex(1.0 - eps, 0)), cal);
    for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(z.status[i] == PointStatus::near_open);
  }
  for (double eps : {1e-8, 1e-6, 1e-3}) {
    const ImpedanceTrace z = extract_impedance(constant_trace(g, Complex(1.0 - eps, 0)), cal);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      CHECK(z.status[i] == PointStatus::ok);
      CHECK(std::isfinite(z.z[i].real()));
      CHECK(std::isfinite(z.z[i].imag()));
    }
  }
}

TEST_CASE("ill-conditioned calibration points propagate") {
  const FrequencyGrid g = small_grid();
  StandardsTriple s;
  s.gamma_open = constant_trace(g, Complex(1, 0));
  s.gamma_short = constant_trace(g, Complex(-1, 0));
  Eigen::ArrayXcd load = Eigen::ArrayXcd::Zero(g.size());
  load[7] = Complex(-1, 0);
  s.gamma_load = ComplexTrace(g, load);
  const CalibrationSet cal = solve_osl(s, 50.0);

  const ImpedanceTrace z = extract_impedance(constant_trace(g, Complex(0.25, 0)), cal);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (i == 7) {
      CHECK(z.status[i] == PointStatus::ill_conditioned_cal);
    } else {
      CHECK(z.status[i] == PointStatus::ok);
    }
  }
}

TEST_CASE("batch extraction") {
  const FrequencyGrid g = small_grid();
  const CalibrationSet cal = identity_cal(g);

  SUBCASE("empty list") { CHECK(extract_batch({}, cal).empty()); }

  SUBCASE("singleton equals single extraction") {
    ComplexTrace t = constant_trace(g, Complex(0.2, 0.1));
    t.name = "only";
    const auto batch = extract_batch({t}, cal);
    REQUIRE(batch.size() == 1);
    const ImpedanceTrace single = extract_impedance(t, cal);
    for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(batch[0].z[i] == single.z[i]);
  }

  SUBCASE("mismatch names the offending trace") {
    ComplexTrace ok_trace = constant_trace(g, Complex(0, 0));
    ok_trace.name = "good";
    ComplexTrace bad = constant_trace(FrequencyGrid::log_spaced(1e6, 2e6, 4), Complex(0, 0));
    bad.name = "bad_trace";
    CHECK_THROWS_WITH_AS(extract_batch({ok_trace, bad}, cal),
                         doctest::Contains("bad_trace"), ValidationError);
  }

  SUBCASE("order preserved") {
    ComplexTrace a = constant_trace(g, Complex(0.0, 0.0));
    ComplexTrace b = constant_trace(g, Complex(1.0 / 3.0, 0.0));
    const auto batch = extract_batch({a, b}, cal);
    REQUIRE(batch.size() == 2);
    CHECK(rel_err(batch[0].z[0], Complex(50, 0)) < 1e-12);
    CHECK(rel_err(batch[1].z[0], Complex(100, 0)) < 1e-12);
  }
}
