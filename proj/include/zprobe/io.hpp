#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "zprobe/benchsim.hpp"
#include "zprobe/calib.hpp"
#include "zprobe/extract.hpp"
#include "zprobe/netcore.hpp"

namespace zprobe {

// ---------------------------------------------------------------------------
// Touchstone v1, one-port

enum class TouchstoneFormat { ri, ma, db };

TouchstoneFormat touchstone_format_from_string(const std::string& name);
const char* to_string(TouchstoneFormat f);

struct TouchstoneDocument {
  TouchstoneFormat format = TouchstoneFormat::ri;
  std::string frequency_unit = "Hz";  // unit as written in the option line
  double reference_ohm = 50.0;
  ComplexTrace trace;  // grid normalized to Hz, values in linear complex form
};

/// Strict one-port reader. Every rejection carries the offending line number.
TouchstoneDocument parse_touchstone_1port(std::string_view text);

/// Emits Hz frequencies and 12 significant digits, so parse(write(x))
/// reproduces x well inside 1e-9.
std::string write_touchstone_1port(const ComplexTrace& trace,
                                   TouchstoneFormat format = TouchstoneFormat::ri,
                                   double reference_ohm = 50.0);

// ---------------------------------------------------------------------------
// CSV

/// Plain complex trace as `freq_hz,re,im` rows.
std::string write_trace_csv(const ComplexTrace& trace);
ComplexTrace parse_trace_csv(std::string_view text);

/// Extracted impedance as
/// `freq_hz,z_re_ohm,z_im_ohm,z_mag_ohm,z_phase_deg,status` rows, preceded by
/// `#` metadata comments (calibration id, source id, resampled marker).
std::string write_impedance_csv(const ImpedanceTrace& trace);
ImpedanceTrace parse_impedance_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Calibration files (versioned JSON)

std::string write_calibration(const CalibrationSet& cal, const std::string& created_utc = "");
CalibrationSet read_calibration(std::string_view text);

// ---------------------------------------------------------------------------
// Bench description files (versioned JSON)

/// Parses and validates a bench description. In strict mode (the default)
/// unknown keys are errors; errors name the offending key path.
BenchModel read_bench_config(std::string_view text, bool strict = true);
std::string write_bench_config(const BenchModel& b);

// ---------------------------------------------------------------------------
// Grid alignment

/// Component-wise linear interpolation in log-frequency onto the target
/// grid. The target must lie within the source span; the result is marked
/// resampled. Points influenced by a non-ok source point inherit its flag.
ComplexTrace resample(const ComplexTrace& trace, const FrequencyGrid& target);

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path);
/// Writes via a temp file in the same directory plus rename, so readers
/// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace zprobe
