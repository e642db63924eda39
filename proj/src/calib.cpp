#include "zprobe/calib.hpp"

#include <cmath>

namespace zprobe {

void validate_standards(const StandardsTriple& s) {
  if (s.gamma_open.grid.empty()) throw ValidationError("standards: empty grid");
  if (!s.gamma_open.grid.identical(s.gamma_short.grid) ||
      !s.gamma_open.grid.identical(s.gamma_load.grid)) {
    throw ValidationError("standards: open/short/load traces are not on one grid");
  }
  if (!s.gamma_open.all_ok() || !s.gamma_short.all_ok() || !s.gamma_load.all_ok())
    throw ValidationError("standards: traces carry non-ok points");
}

CalibrationSet k_from_abcd(const AbcdNetwork& n, ReferenceImpedance z0) {
  if (n.grid.empty()) throw ValidationError("k_from_abcd: empty network");
  const Eigen::Index m = n.size();
  const Complex ref(z0.ohms(), 0.0);

  CalibrationSet cal;
  cal.grid = n.grid;
  cal.k1.resize(m);
  cal.k2.resize(m);
  cal.k3.resize(m);
  cal.flags.assign(static_cast<std::size_t>(m), PointStatus::ok);
  cal.r_load_ohm = z0.ohms();
  cal.z0 = z0;

  for (Eigen::Index i = 0; i < m; ++i) {
    const Complex den = ref * n.c[i] + n.a[i];
    if (std::abs(den) < kSingularFloor) {
      cal.k1[i] = cal.k2[i] = cal.k3[i] = Complex(0.0, 0.0);
      cal.flags[static_cast<std::size_t>(i)] = PointStatus::singular;
      continue;
    }
    cal.k1[i] = -(ref * n.d[i] + n.b[i]) / den;
    cal.k2[i] = -(ref * n.d[i] - n.b[i]) / den;
    cal.k3[i] = (ref * n.c[i] - n.a[i]) / den;
  }
  return cal;
}

CalibrationSet solve_osl(const StandardsTriple& s, double r_load_ohm, ReferenceImpedance z0,
                         double conditioning_floor) {
  validate_standards(s);
  if (!(r_load_ohm > 0.0) || !std::isfinite(r_load_ohm))
    throw ValidationError("solve_osl: load resistance must be positive and finite");

  const Eigen::Index m = s.gamma_open.size();
  CalibrationSet cal;
  cal.grid = s.gamma_open.grid;
  cal.k1.resize(m);
  cal.k2.resize(m);
  cal.k3.resize(m);
  cal.flags.assign(static_cast<std::size_t>(m), PointStatus::ok);
  cal.r_load_ohm = r_load_ohm;
  cal.z0 = z0;

  for (Eigen::Index i = 0; i < m; ++i) {
    const Complex go = s.gamma_open.values[i];
    const Complex gs = s.gamma_short.values[i];
    const Complex gl = s.gamma_load.values[i];

    cal.k3[i] = -go;  // exact negation, by construction

    const Complex den = gl - gs;
    if (std::abs(den) < conditioning_floor) {
      cal.k1[i] = cal.k2[i] = Complex(0.0, 0.0);
      cal.flags[static_cast<std::size_t>(i)] = PointStatus::ill_conditioned;
      continue;
    }
    cal.k1[i] = r_load_ohm * (gl - go) / den;
    cal.k2[i] = r_load_ohm * gs * (go - gl) / den;
  }
  return cal;
}

ConditioningReport conditioning_report(const CalibrationSet& cal, const StandardsTriple& s) {
  validate_standards(s);
  if (!cal.grid.identical(s.gamma_open.grid))
    throw ValidationError("conditioning_report: calibration and standards grids differ");

  const Eigen::Index m = cal.size();
  ConditioningReport rep;
  rep.grid = cal.grid;
  rep.load_short_distance = (s.gamma_load.values - s.gamma_short.values).abs();
  rep.open_load_distance = (s.gamma_open.values - s.gamma_load.values).abs();
  const Eigen::ArrayXd open_short = (s.gamma_open.values - s.gamma_short.values).abs();
  rep.min_pairwise_distance =
      rep.load_short_distance.min(rep.open_load_distance).min(open_short);
  rep.flags = cal.flags;

  std::vector<bool> flagged(static_cast<std::size_t>(m), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (cal.flags[static_cast<std::size_t>(i)] != PointStatus::ok) {
      flagged[static_cast<std::size_t>(i)] = true;
      ++rep.flagged_count;
    }
  }
  rep.flagged_bands = contiguous_bands(cal.grid, flagged);
  return rep;
}

}  // namespace zprobe
