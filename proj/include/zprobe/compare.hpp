#pragma once

#include <string>
#include <vector>

#include "zprobe/extract.hpp"
#include "zprobe/netcore.hpp"

namespace zprobe {

/// Point-by-point deviation between two impedance traces on one grid.
/// A band is a maximal run of consecutive points whose magnitude ratio
/// exceeds the threshold; endpoints sit on the outermost exceeding points.
struct CompareReport {
  FrequencyGrid grid;
  Eigen::ArrayXd ratio_db;        // 20*log10(|Z_a| / |Z_b|), NaN where skipped
  Eigen::ArrayXd phase_diff_deg;  // wrapped to (-180, 180], NaN where skipped
  std::vector<bool> valid;        // both points ok and nonzero
  double threshold_db = 3.0;
  std::vector<FrequencyBand> bands;
  double max_abs_ratio_db = 0.0;

  std::size_t band_count() const { return bands.size(); }
};

CompareReport compare_traces(const ImpedanceTrace& a, const ImpedanceTrace& b,
                             double threshold_db = 3.0);

/// Report as `#`-commented summary plus per-point CSV rows.
std::string write_compare_report(const CompareReport& report);

}  // namespace zprobe
