#pragma once

#include <string>
#include <vector>

#include "zprobe/netcore.hpp"

namespace zprobe {

/// Points where |gamma_load - gamma_short| falls below this are flagged
/// ill-conditioned; the three standards no longer separate there.
inline constexpr double kDefaultConditioningFloor = 1e-6;

/// The three frequency-dependent coefficients that tie the reflection
/// coefficient at the measurement plane to the impedance at the far port.
/// Valid only for the setup and the sweep they were derived on, so the grid
/// is embedded; applying them on another grid is an error unless the caller
/// resamples explicitly.
struct CalibrationSet {
  FrequencyGrid grid;
  Eigen::ArrayXcd k1;  // ohm
  Eigen::ArrayXcd k2;  // ohm
  Eigen::ArrayXcd k3;  // dimensionless
  std::vector<PointStatus> flags;
  double r_load_ohm = 50.0;
  ReferenceImpedance z0;
  std::string label;
  bool resampled = false;

  Eigen::Index size() const { return k1.size(); }
};

/// Reflection coefficients measured against the open, short, and resistive
/// load standards, on one shared grid.
struct StandardsTriple {
  ComplexTrace gamma_open;
  ComplexTrace gamma_short;
  ComplexTrace gamma_load;
};

void validate_standards(const StandardsTriple& s);

/// Forward route: coefficients straight from a known ABCD network.
///   k1 = -(Z0*D + B) / (Z0*C + A)
///   k2 = -(Z0*D - B) / (Z0*C + A)
///   k3 =  (Z0*C - A) / (Z0*C + A)
CalibrationSet k_from_abcd(const AbcdNetwork& n, ReferenceImpedance z0 = ReferenceImpedance());

/// Measurement route: coefficients from the three measured standards.
///   k1 = r_load * (G_L - G_o) / (G_L - G_s)
///   k2 = r_load * G_s * (G_o - G_L) / (G_L - G_s)
///   k3 = -G_o
/// r_load generalizes the 50-ohm load standard; anything else is an
/// extension beyond the published procedure.
CalibrationSet solve_osl(const StandardsTriple& s, double r_load_ohm = 50.0,
                         ReferenceImpedance z0 = ReferenceImpedance(),
                         double conditioning_floor = kDefaultConditioningFloor);

/// How well separated the standards were, point by point.
struct ConditioningReport {
  FrequencyGrid grid;
  Eigen::ArrayXd load_short_distance;   // |G_L - G_s|
  Eigen::ArrayXd open_load_distance;    // |G_o - G_L|
  Eigen::ArrayXd min_pairwise_distance; // min over the three pairs
  std::vector<PointStatus> flags;
  std::vector<FrequencyBand> flagged_bands;
  Eigen::Index flagged_count = 0;
};

ConditioningReport conditioning_report(const CalibrationSet& cal, const StandardsTriple& s);

}  // namespace zprobe
