#include "zprobe/extract.hpp"

#include <cmath>

namespace zprobe {

ImpedanceTrace extract_impedance(const ComplexTrace& gamma_m, const CalibrationSet& cal,
                                 double near_open_rel) {
  if (cal.grid.empty()) throw ValidationError("extract_impedance: empty calibration");
  const Eigen::Index mism = first_grid_mismatch(gamma_m.grid, cal.grid);
  if (mism >= 0) {
    std::string msg = "extract_impedance: measurement grid (" +
                      std::to_string(gamma_m.grid.size()) + " points) does not match " +
                      "calibration grid (" + std::to_string(cal.grid.size()) + " points)";
    if (mism < gamma_m.grid.size() && mism < cal.grid.size()) {
      msg += "; first difference at point " + std::to_string(mism) + ": " +
             std::to_string(gamma_m.grid[mism]) + " Hz vs " + std::to_string(cal.grid[mism]) +
             " Hz";
    }
    throw ValidationError(msg);
  }

  const Eigen::Index m = cal.size();
  ImpedanceTrace out;
  out.grid = cal.grid;
  out.z.resize(m);
  out.status.assign(static_cast<std::size_t>(m), PointStatus::ok);
  out.cal_id = cal.label;
  out.source_id = gamma_m.name;
  out.resampled = gamma_m.resampled;

  for (Eigen::Index i = 0; i < m; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    if (cal.flags[si] != PointStatus::ok) {
      out.z[i] = Complex(0.0, 0.0);
      out.status[si] = PointStatus::ill_conditioned_cal;
      continue;
    }
    if (gamma_m.status[si] != PointStatus::ok) {
      out.z[i] = Complex(0.0, 0.0);
      out.status[si] = gamma_m.status[si];
      continue;
    }
    const Complex den = gamma_m.values[i] + cal.k3[i];
    if (std::abs(den) < near_open_rel * (1.0 + std::abs(cal.k3[i]))) {
      out.z[i] = Complex(0.0, 0.0);
      out.status[si] = PointStatus::near_open;
      continue;
    }
    out.z[i] = (cal.k1[i] * gamma_m.values[i] + cal.k2[i]) / den;
  }
  return out;
}

std::vector<ImpedanceTrace> extract_batch(const std::vector<ComplexTrace>& measurements,
                                          const CalibrationSet& cal, double near_open_rel) {
  std::vector<ImpedanceTrace> out;
  out.reserve(measurements.size());
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    if (!measurements[i].grid.identical(cal.grid)) {
      const std::string name =
          measurements[i].name.empty() ? "#" + std::to_string(i) : measurements[i].name;
      throw ValidationError("extract_batch: trace " + name +
                            " is not on the calibration grid");
    }
    out.push_back(extract_impedance(measurements[i], cal, near_open_rel));
  }
  return out;
}

}  // namespace zprobe
