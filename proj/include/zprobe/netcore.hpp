#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "zprobe/errors.hpp"

namespace zprobe {

using Complex = std::complex<double>;

/// Denominator magnitudes below this are treated as exact singularities.
inline constexpr double kSingularFloor = 1e-30;

/// Relative tolerance under which two frequency grids count as identical.
inline constexpr double kGridIdentityRel = 1e-9;

// Per-point validity flag. Frequency-local degeneracies mark the affected
// point instead of failing the whole sweep; an isolated bad point in a VNA
// sweep must never destroy the rest of it.
enum class PointStatus : std::uint8_t {
  ok,
  open,                 // value is an ideal open (infinite impedance)
  singular,             // computation degenerate at this point
  near_open,            // extraction denominator below the near-open floor
  ill_conditioned,      // calibration solve below the conditioning floor
  ill_conditioned_cal,  // extraction inherited a bad calibration point
};

const char* to_string(PointStatus s);
PointStatus point_status_from_string(const std::string& label);

/// Strictly increasing, positive frequency points in Hz. A zero-length grid
/// is representable only so that empty interchange files can round-trip
/// through the I/O layer; every network operation rejects it.
class FrequencyGrid {
 public:
  FrequencyGrid() = default;
  explicit FrequencyGrid(Eigen::ArrayXd points_hz);

  static FrequencyGrid log_spaced(double f_start_hz, double f_stop_hz, Eigen::Index n);
  static FrequencyGrid linear_spaced(double f_start_hz, double f_stop_hz, Eigen::Index n);

  const Eigen::ArrayXd& points_hz() const { return points_hz_; }
  Eigen::Index size() const { return points_hz_.size(); }
  bool empty() const { return points_hz_.size() == 0; }
  double operator[](Eigen::Index i) const { return points_hz_[i]; }
  double front() const { return points_hz_[0]; }
  double back() const { return points_hz_[points_hz_.size() - 1]; }

  bool identical(const FrequencyGrid& other, double rel_tol = kGridIdentityRel) const;

 private:
  Eigen::ArrayXd points_hz_;
};

/// Index of the first point where the grids differ (or sizes differ), -1 if identical.
Eigen::Index first_grid_mismatch(const FrequencyGrid& a, const FrequencyGrid& b,
                                 double rel_tol = kGridIdentityRel);

/// Complex samples over a frequency grid, with a status flag per point.
/// Values are finite wherever the status is ok.
struct ComplexTrace {
  FrequencyGrid grid;
  Eigen::ArrayXcd values;
  std::vector<PointStatus> status;

  std::string name;
  std::vector<std::string> comments;
  bool resampled = false;

  ComplexTrace() = default;
  ComplexTrace(FrequencyGrid g, Eigen::ArrayXcd v);
  ComplexTrace(FrequencyGrid g, Eigen::ArrayXcd v, std::vector<PointStatus> st);

  Eigen::Index size() const { return values.size(); }
  bool all_ok() const;
};

ComplexTrace constant_trace(const FrequencyGrid& grid, Complex value);

/// A load trace whose every point is an ideal open; input_impedance resolves
/// it through the analytic limit A/C instead of a large finite resistor.
ComplexTrace open_load(const FrequencyGrid& grid);

/// Real, positive reference impedance of the measurement port.
class ReferenceImpedance {
 public:
  ReferenceImpedance() = default;
  explicit ReferenceImpedance(double ohms);
  double ohms() const { return ohms_; }

 private:
  double ohms_ = 50.0;
};

/// Per-frequency 2x2 transmission matrix [[A, B], [C, D]] stored as four
/// aligned arrays so per-frequency algebra stays elementwise.
struct AbcdNetwork {
  FrequencyGrid grid;
  Eigen::ArrayXcd a;  // dimensionless
  Eigen::ArrayXcd b;  // ohm
  Eigen::ArrayXcd c;  // siemens
  Eigen::ArrayXcd d;  // dimensionless

  static AbcdNetwork identity(const FrequencyGrid& grid);

  Eigen::Index size() const { return a.size(); }
  Eigen::ArrayXcd determinant() const { return a * d - b * c; }
};

// Element constructors. All of them build reciprocal networks (det == 1).
AbcdNetwork make_series(const FrequencyGrid& grid, const Eigen::ArrayXcd& z_of_f);
AbcdNetwork make_series(const FrequencyGrid& grid, Complex z);
AbcdNetwork make_shunt(const FrequencyGrid& grid, const Eigen::ArrayXcd& y_of_f);
AbcdNetwork make_shunt(const FrequencyGrid& grid, Complex y);
AbcdNetwork make_transformer(const FrequencyGrid& grid, double turns_ratio);
AbcdNetwork make_transmission_line(const FrequencyGrid& grid, double z0_ohm,
                                   double length_m, double velocity_factor = 1.0);

/// Matrix product a*b per frequency; a is the side nearer the measurement plane.
AbcdNetwork cascade(const AbcdNetwork& a, const AbcdNetwork& b);

/// Z_in = (A*Z_L + B) / (C*Z_L + D). Load points flagged open take the limit
/// A/C; a vanishing denominator flags the point instead of failing the sweep.
ComplexTrace input_impedance(const AbcdNetwork& n, const ComplexTrace& z_load);

/// Gamma = (Z - Z0) / (Z + Z0); an open point maps to exactly +1.
ComplexTrace reflection_from_impedance(const ComplexTrace& z,
                                       ReferenceImpedance z0 = ReferenceImpedance());

/// Z = Z0 * (1 + Gamma) / (1 - Gamma); Gamma == 1 flags the point open.
ComplexTrace impedance_from_reflection(const ComplexTrace& gamma,
                                       ReferenceImpedance z0 = ReferenceImpedance());

/// Closed frequency interval, endpoints on grid points.
struct FrequencyBand {
  double f_lo_hz = 0.0;
  double f_hi_hz = 0.0;
};

/// Maximal runs of consecutive true mask points, as frequency intervals.
std::vector<FrequencyBand> contiguous_bands(const FrequencyGrid& grid,
                                            const std::vector<bool>& mask);

}  // namespace zprobe
