#pragma once

#include <string>
#include <vector>

#include "zprobe/calib.hpp"
#include "zprobe/netcore.hpp"

namespace zprobe {

/// Extraction denominators with |gamma + k3| below this (relative, scaled by
/// 1 + |k3|) flag the point near-open instead of producing a huge value.
inline constexpr double kDefaultNearOpenRel = 1e-9;

/// Extracted in-circuit impedance over frequency, on the calibration's grid.
struct ImpedanceTrace {
  FrequencyGrid grid;
  Eigen::ArrayXcd z;  // ohm
  std::vector<PointStatus> status;

  std::string cal_id;
  std::string source_id;
  bool resampled = false;

  Eigen::Index size() const { return z.size(); }
};

/// Z = (k1 * gamma + k2) / (gamma + k3), point by point. Points with a bad
/// calibration inherit the ill-conditioned-cal flag; near-open points are
/// flagged rather than reported as huge impedances.
ImpedanceTrace extract_impedance(const ComplexTrace& gamma_m, const CalibrationSet& cal,
                                 double near_open_rel = kDefaultNearOpenRel);

/// Order-preserving extraction of several traces against one calibration.
/// The first grid mismatch aborts, naming the offending trace.
std::vector<ImpedanceTrace> extract_batch(const std::vector<ComplexTrace>& measurements,
                                          const CalibrationSet& cal,
                                          double near_open_rel = kDefaultNearOpenRel);

}  // namespace zprobe
