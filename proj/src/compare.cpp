#include "zprobe/compare.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace zprobe {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double wrap_degrees(double deg) {
  while (deg > 180.0) deg -= 360.0;
  while (deg <= -180.0) deg += 360.0;
  return deg;
}

}  // namespace

CompareReport compare_traces(const ImpedanceTrace& a, const ImpedanceTrace& b,
                             double threshold_db) {
  if (a.grid.empty()) throw ValidationError("compare: empty trace");
  if (!a.grid.identical(b.grid))
    throw ValidationError("compare: traces are not on identical grids");
  if (!(threshold_db > 0.0)) throw ValidationError("compare: threshold must be > 0 dB");

  const Eigen::Index n = a.size();
  CompareReport rep;
  rep.grid = a.grid;
  rep.threshold_db = threshold_db;
  rep.ratio_db = Eigen::ArrayXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  rep.phase_diff_deg = Eigen::ArrayXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  rep.valid.assign(static_cast<std::size_t>(n), false);

  std::vector<bool> exceed(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    if (a.status[si] != PointStatus::ok || b.status[si] != PointStatus::ok) continue;
    const double mag_a = std::abs(a.z[i]);
    const double mag_b = std::abs(b.z[i]);
    if (mag_a == 0.0 || mag_b == 0.0) continue;
    rep.valid[si] = true;
    rep.ratio_db[i] = 20.0 * std::log10(mag_a / mag_b);
    rep.phase_diff_deg[i] =
        wrap_degrees((std::arg(a.z[i]) - std::arg(b.z[i])) * 180.0 / std::numbers::pi);
    rep.max_abs_ratio_db = std::max(rep.max_abs_ratio_db, std::abs(rep.ratio_db[i]));
    exceed[si] = std::abs(rep.ratio_db[i]) > threshold_db;
  }
  rep.bands = contiguous_bands(a.grid, exceed);
  return rep;
}

std::string write_compare_report(const CompareReport& report) {
  std::string out;
  out += "# zprobe compare report\n";
  out += "# threshold_db " + fmt_g(report.threshold_db) + "\n";
  out += "# max_abs_ratio_db " + fmt_g(report.max_abs_ratio_db) + "\n";
  out += "# band_count " + std::to_string(report.band_count()) + "\n";
  for (const FrequencyBand& band : report.bands)
    out += "# band " + fmt_g(band.f_lo_hz) + " " + fmt_g(band.f_hi_hz) + "\n";
  out += "freq_hz,ratio_db,phase_diff_deg,exceeds\n";
  for (Eigen::Index i = 0; i < report.grid.size(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    out += fmt_g(report.grid[i]) + ",";
    if (report.valid[si]) {
      const bool exceeds = std::abs(report.ratio_db[i]) > report.threshold_db;
      out += fmt_g(report.ratio_db[i]) + "," + fmt_g(report.phase_diff_deg[i]) + "," +
             (exceeds ? "1" : "0");
    } else {
      out += "nan,nan,0";
    }
    out += "\n";
  }
  return out;
}

}  // namespace zprobe
