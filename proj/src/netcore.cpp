#include "zprobe/netcore.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace zprobe {

namespace {

void require_nonempty(const FrequencyGrid& grid) {
  if (grid.empty()) throw ValidationError("frequency grid is empty");
}

void require_same_grid(const FrequencyGrid& a, const FrequencyGrid& b, const char* what) {
  if (!a.identical(b)) {
    throw ValidationError(std::string(what) + ": frequency grids differ (" +
                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                          " points)");
  }
}

}  // namespace

const char* to_string(PointStatus s) {
  switch (s) {
    case PointStatus::ok: return "ok";
    case PointStatus::open: return "open";
    case PointStatus::singular: return "singular";
    case PointStatus::near_open: return "near-open";
    case PointStatus::ill_conditioned: return "ill-conditioned";
    case PointStatus::ill_conditioned_cal: return "ill-conditioned-cal";
  }
  return "unknown";
}

PointStatus point_status_from_string(const std::string& label) {
  if (label == "ok") return PointStatus::ok;
  if (label == "open") return PointStatus::open;
  if (label == "singular") return PointStatus::singular;
  if (label == "near-open") return PointStatus::near_open;
  if (label == "ill-conditioned") return PointStatus::ill_conditioned;
  if (label == "ill-conditioned-cal") return PointStatus::ill_conditioned_cal;
  throw ValidationError("unknown point status '" + label + "'");
}

FrequencyGrid::FrequencyGrid(Eigen::ArrayXd points_hz) : points_hz_(std::move(points_hz)) {
  for (Eigen::Index i = 0; i < points_hz_.size(); ++i) {
    if (!(points_hz_[i] > 0.0) || !std::isfinite(points_hz_[i])) {
      throw ValidationError("frequency grid: point " + std::to_string(i) +
                            " is not a positive finite frequency");
    }
    if (i > 0 && !(points_hz_[i] > points_hz_[i - 1])) {
      throw ValidationError("frequency grid: not strictly increasing at point " +
                            std::to_string(i));
    }
  }
}

FrequencyGrid FrequencyGrid::log_spaced(double f_start_hz, double f_stop_hz, Eigen::Index n) {
  if (n < 1) throw ValidationError("log_spaced: need at least one point");
  if (!(f_start_hz > 0.0)) throw ValidationError("log_spaced: start frequency must be > 0");
  if (n == 1) {
    if (f_start_hz != f_stop_hz)
      throw ValidationError("log_spaced: single-point grid needs start == stop");
    Eigen::ArrayXd one(1);
    one[0] = f_start_hz;
    return FrequencyGrid(one);
  }
  if (!(f_stop_hz > f_start_hz))
    throw ValidationError("log_spaced: stop frequency must exceed start");
  Eigen::ArrayXd pts =
      Eigen::ArrayXd::LinSpaced(n, std::log(f_start_hz), std::log(f_stop_hz)).exp();
  pts[0] = f_start_hz;
  pts[n - 1] = f_stop_hz;
  return FrequencyGrid(pts);
}

FrequencyGrid FrequencyGrid::linear_spaced(double f_start_hz, double f_stop_hz, Eigen::Index n) {
  if (n < 1) throw ValidationError("linear_spaced: need at least one point");
  if (!(f_start_hz > 0.0)) throw ValidationError("linear_spaced: start frequency must be > 0");
  if (n == 1) {
    if (f_start_hz != f_stop_hz)
      throw ValidationError("linear_spaced: single-point grid needs start == stop");
    Eigen::ArrayXd one(1);
    one[0] = f_start_hz;
    return FrequencyGrid(one);
  }
  if (!(f_stop_hz > f_start_hz))
    throw ValidationError("linear_spaced: stop frequency must exceed start");
  return FrequencyGrid(Eigen::ArrayXd::LinSpaced(n, f_start_hz, f_stop_hz));
}

bool FrequencyGrid::identical(const FrequencyGrid& other, double rel_tol) const {
  return first_grid_mismatch(*this, other, rel_tol) < 0;
}

Eigen::Index first_grid_mismatch(const FrequencyGrid& a, const FrequencyGrid& b,
                                 double rel_tol) {
  const Eigen::Index n = std::min(a.size(), b.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = std::max(a[i], b[i]);
    if (std::abs(a[i] - b[i]) > rel_tol * scale) return i;
  }
  if (a.size() != b.size()) return n;
  return -1;
}

ComplexTrace::ComplexTrace(FrequencyGrid g, Eigen::ArrayXcd v)
    : ComplexTrace(std::move(g), std::move(v), {}) {}

ComplexTrace::ComplexTrace(FrequencyGrid g, Eigen::ArrayXcd v, std::vector<PointStatus> st)
    : grid(std::move(g)), values(std::move(v)), status(std::move(st)) {
  if (values.size() != grid.size())
    throw ValidationError("complex trace: value count does not match grid");
  if (status.size() != static_cast<std::size_t>(grid.size()) && !status.empty())
    throw ValidationError("complex trace: status count does not match grid");
  if (status.empty()) status.assign(static_cast<std::size_t>(grid.size()), PointStatus::ok);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (status[static_cast<std::size_t>(i)] == PointStatus::ok &&
        (!std::isfinite(values[i].real()) || !std::isfinite(values[i].imag()))) {
      throw ValidationError("complex trace: non-finite value at ok point " + std::to_string(i));
    }
  }
}

bool ComplexTrace::all_ok() const {
  for (PointStatus s : status)
    if (s != PointStatus::ok) return false;
  return true;
}

ComplexTrace constant_trace(const FrequencyGrid& grid, Complex value) {
  return ComplexTrace(grid, Eigen::ArrayXcd::Constant(grid.size(), value));
}

ComplexTrace open_load(const FrequencyGrid& grid) {
  ComplexTrace t(grid, Eigen::ArrayXcd::Zero(grid.size()));
  t.status.assign(static_cast<std::size_t>(grid.size()), PointStatus::open);
  return t;
}

ReferenceImpedance::ReferenceImpedance(double ohms) : ohms_(ohms) {
  if (!(ohms > 0.0) || !std::isfinite(ohms))
    throw ValidationError("reference impedance must be a positive finite resistance");
}

AbcdNetwork AbcdNetwork::identity(const FrequencyGrid& grid) {
  require_nonempty(grid);
  const Eigen::Index n = grid.size();
  return AbcdNetwork{grid, Eigen::ArrayXcd::Ones(n), Eigen::ArrayXcd::Zero(n),
                     Eigen::ArrayXcd::Zero(n), Eigen::ArrayXcd::Ones(n)};
}

AbcdNetwork make_series(const FrequencyGrid& grid, const Eigen::ArrayXcd& z_of_f) {
  require_nonempty(grid);
  if (z_of_f.size() != grid.size())
    throw ValidationError("make_series: impedance count does not match grid");
  const Eigen::Index n = grid.size();
  return AbcdNetwork{grid, Eigen::ArrayXcd::Ones(n), z_of_f, Eigen::ArrayXcd::Zero(n),
                     Eigen::ArrayXcd::Ones(n)};
}

AbcdNetwork make_series(const FrequencyGrid& grid, Complex z) {
  require_nonempty(grid);
  return make_series(grid, Eigen::ArrayXcd::Constant(grid.size(), z));
}

AbcdNetwork make_shunt(const FrequencyGrid& grid, const Eigen::ArrayXcd& y_of_f) {
  require_nonempty(grid);
  if (y_of_f.size() != grid.size())
    throw ValidationError("make_shunt: admittance count does not match grid");
  const Eigen::Index n = grid.size();
  return AbcdNetwork{grid, Eigen::ArrayXcd::Ones(n), Eigen::ArrayXcd::Zero(n), y_of_f,
                     Eigen::ArrayXcd::Ones(n)};
}

AbcdNetwork make_shunt(const FrequencyGrid& grid, Complex y) {
  require_nonempty(grid);
  return make_shunt(grid, Eigen::ArrayXcd::Constant(grid.size(), y));
}

AbcdNetwork make_transformer(const FrequencyGrid& grid, double turns_ratio) {
  require_nonempty(grid);
  if (turns_ratio == 0.0 || !std::isfinite(turns_ratio))
    throw ValidationError("make_transformer: turns ratio must be finite and nonzero");
  const Eigen::Index n = grid.size();
  return AbcdNetwork{grid, Eigen::ArrayXcd::Constant(n, Complex(turns_ratio, 0.0)),
                     Eigen::ArrayXcd::Zero(n), Eigen::ArrayXcd::Zero(n),
                     Eigen::ArrayXcd::Constant(n, Complex(1.0 / turns_ratio, 0.0))};
}

AbcdNetwork make_transmission_line(const FrequencyGrid& grid, double z0_ohm, double length_m,
                                   double velocity_factor) {
  require_nonempty(grid);
  if (!(z0_ohm > 0.0)) throw ValidationError("transmission line: characteristic impedance must be > 0");
  if (!(length_m > 0.0)) throw ValidationError("transmission line: length must be > 0");
  if (!(velocity_factor > 0.0) || velocity_factor > 1.0)
    throw ValidationError("transmission line: velocity factor must be in (0, 1]");

  constexpr double c0 = 299792458.0;
  const Eigen::Index n = grid.size();
  AbcdNetwork net{grid, Eigen::ArrayXcd(n), Eigen::ArrayXcd(n), Eigen::ArrayXcd(n),
                  Eigen::ArrayXcd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double theta =
        2.0 * std::numbers::pi * grid[i] * length_m / (c0 * velocity_factor);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    net.a[i] = Complex(ct, 0.0);
    net.b[i] = Complex(0.0, z0_ohm * st);
    net.c[i] = Complex(0.0, st / z0_ohm);
    net.d[i] = Complex(ct, 0.0);
  }
  return net;
}

AbcdNetwork cascade(const AbcdNetwork& a, const AbcdNetwork& b) {
  require_nonempty(a.grid);
  require_same_grid(a.grid, b.grid, "cascade");
  return AbcdNetwork{a.grid, a.a * b.a + a.b * b.c, a.a * b.b + a.b * b.d,
                     a.c * b.a + a.d * b.c, a.c * b.b + a.d * b.d};
}

ComplexTrace input_impedance(const AbcdNetwork& n, const ComplexTrace& z_load) {
  require_nonempty(n.grid);
  require_same_grid(n.grid, z_load.grid, "input_impedance");

  const Eigen::Index m = n.size();
  Eigen::ArrayXcd z(m);
  std::vector<PointStatus> status(static_cast<std::size_t>(m), PointStatus::ok);
  for (Eigen::Index i = 0; i < m; ++i) {
    const PointStatus load_status = z_load.status[static_cast<std::size_t>(i)];
    if (load_status == PointStatus::open) {
      // Analytic limit of (A*Z + B)/(C*Z + D) as Z -> infinity.
      if (std::abs(n.c[i]) < kSingularFloor) {
        z[i] = Complex(0.0, 0.0);
        status[static_cast<std::size_t>(i)] = PointStatus::open;
      } else {
        z[i] = n.a[i] / n.c[i];
      }
    } else if (load_status != PointStatus::ok) {
      z[i] = Complex(0.0, 0.0);
      status[static_cast<std::size_t>(i)] = load_status;
    } else {
      const Complex den = n.c[i] * z_load.values[i] + n.d[i];
      if (std::abs(den) < kSingularFloor) {
        z[i] = Complex(0.0, 0.0);
        status[static_cast<std::size_t>(i)] = PointStatus::singular;
      } else {
        z[i] = (n.a[i] * z_load.values[i] + n.b[i]) / den;
      }
    }
  }
  return ComplexTrace(n.grid, std::move(z), std::move(status));
}

ComplexTrace reflection_from_impedance(const ComplexTrace& z, ReferenceImpedance z0) {
  require_nonempty(z.grid);
  const Eigen::Index m = z.size();
  const Complex ref(z0.ohms(), 0.0);
  Eigen::ArrayXcd gamma(m);
  std::vector<PointStatus> status(static_cast<std::size_t>(m), PointStatus::ok);
  for (Eigen::Index i = 0; i < m; ++i) {
    const PointStatus in_status = z.status[static_cast<std::size_t>(i)];
    if (in_status == PointStatus::open) {
      gamma[i] = Complex(1.0, 0.0);
    } else if (in_status != PointStatus::ok) {
      gamma[i] = Complex(0.0, 0.0);
      status[static_cast<std::size_t>(i)] = in_status;
    } else {
      const Complex den = z.values[i] + ref;
      if (std::abs(den) < kSingularFloor) {
        gamma[i] = Complex(0.0, 0.0);
        status[static_cast<std::size_t>(i)] = PointStatus::singular;
      } else {
        gamma[i] = (z.values[i] - ref) / den;
      }
    }
  }
  return ComplexTrace(z.grid, std::move(gamma), std::move(status));
}

ComplexTrace impedance_from_reflection(const ComplexTrace& gamma, ReferenceImpedance z0) {
  require_nonempty(gamma.grid);
  const Eigen::Index m = gamma.size();
  Eigen::ArrayXcd z(m);
  std::vector<PointStatus> status(static_cast<std::size_t>(m), PointStatus::ok);
  for (Eigen::Index i = 0; i < m; ++i) {
    const PointStatus in_status = gamma.status[static_cast<std::size_t>(i)];
    if (in_status != PointStatus::ok) {
      z[i] = Complex(0.0, 0.0);
      status[static_cast<std::size_t>(i)] = in_status;
      continue;
    }
    const Complex den = Complex(1.0, 0.0) - gamma.values[i];
    if (std::abs(den) < kSingularFloor) {
      z[i] = Complex(0.0, 0.0);
      status[static_cast<std::size_t>(i)] = PointStatus::open;
    } else {
      z[i] = z0.ohms() * (Complex(1.0, 0.0) + gamma.values[i]) / den;
    }
  }
  return ComplexTrace(gamma.grid, std::move(z), std::move(status));
}

std::vector<FrequencyBand> contiguous_bands(const FrequencyGrid& grid,
                                            const std::vector<bool>& mask) {
  if (mask.size() != static_cast<std::size_t>(grid.size()))
    throw ValidationError("contiguous_bands: mask size does not match grid");
  std::vector<FrequencyBand> bands;
  Eigen::Index i = 0;
  const Eigen::Index n = grid.size();
  while (i < n) {
    if (!mask[static_cast<std::size_t>(i)]) {
      ++i;
      continue;
    }
    Eigen::Index j = i;
    while (j + 1 < n && mask[static_cast<std::size_t>(j + 1)]) ++j;
    bands.push_back(FrequencyBand{grid[i], grid[j]});
    i = j + 1;
  }
  return bands;
}

}  // namespace zprobe
