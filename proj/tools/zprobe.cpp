// zprobe command line: simulate a measurement bench, calibrate from OSL
// standards, extract in-circuit impedance, compare traces, convert formats.
//
// Exit codes: 0 success, 1 I/O failure, 2 usage or validation failure,
// 3 deviation detected (only with --fail-on-deviation).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "zprobe/benchsim.hpp"
#include "zprobe/calib.hpp"
#include "zprobe/compare.hpp"
#include "zprobe/extract.hpp"
#include "zprobe/io.hpp"
#include "zprobe/netcore.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDeviation = 3;

// Input paths that do not exist are also tried under $ZPROBE_CONFIG_DIR.
fs::path resolve_input(const std::string& path) {
  fs::path p(path);
  if (fs::exists(p)) return p;
  if (const char* dir = std::getenv("ZPROBE_CONFIG_DIR")) {
    const fs::path alt = fs::path(dir) / p;
    if (fs::exists(alt)) return alt;
  }
  return p;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::pair<std::string, double> parse_variant_spec(const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw zprobe::ValidationError("--dut-variant expects label=scale, got '" + spec + "'");
  const std::string label = spec.substr(0, eq);
  std::size_t used = 0;
  double scale = 0.0;
  try {
    scale = std::stod(spec.substr(eq + 1), &used);
  } catch (const std::exception&) {
    throw zprobe::ValidationError("--dut-variant '" + spec + "': scale is not a number");
  }
  if (used != spec.size() - eq - 1)
    throw zprobe::ValidationError("--dut-variant '" + spec + "': scale is not a number");
  return {label, scale};
}

int run_simulate(const std::string& bench_path, const std::string& out_dir, bool standards,
                 const std::vector<std::string>& variant_specs, bool allow_unknown_keys) {
  const fs::path bench_file = resolve_input(bench_path);
  const std::string text = zprobe::read_file(bench_file);
  const zprobe::BenchModel bench = zprobe::read_bench_config(text, !allow_unknown_keys);

  std::vector<std::pair<std::string, double>> edits;
  for (const std::string& spec : variant_specs) edits.push_back(parse_variant_spec(spec));

  // Synthesize everything before touching the filesystem; a bad bench must
  // not leave partial outputs behind.
  if (!bench.dut)
    throw zprobe::ValidationError("bench has no dut block; nothing to simulate");
  std::vector<zprobe::LoopElement> duts = zprobe::mode_variants(*bench.dut, edits);

  std::vector<std::pair<std::string, zprobe::ComplexTrace>> outputs;
  outputs.emplace_back("gamma_m.s1p", zprobe::synth_gamma(bench));
  for (std::size_t i = 1; i < duts.size(); ++i) {
    outputs.emplace_back("gamma_m_v" + std::to_string(i) + ".s1p",
                         zprobe::synth_gamma(bench, duts[i]));
  }
  if (standards) {
    const zprobe::StandardsTriple s = zprobe::synth_standards(bench);
    outputs.emplace_back("open.s1p", s.gamma_open);
    outputs.emplace_back("short.s1p", s.gamma_short);
    outputs.emplace_back("load.s1p", s.gamma_load);
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw zprobe::IoError("cannot create output directory '" + out_dir + "'");

  json manifest;
  manifest["schema"] = "zprobe-manifest";
  manifest["version"] = 1;
  manifest["bench_file"] = bench_file.filename().string();
  manifest["bench_hash_fnv1a64"] = hex64(fnv1a64(text));
  manifest["seed"] = bench.noise.seed;
  manifest["sigma"] = bench.noise.sigma;
  json files = json::array();
  for (const auto& [name, trace] : outputs) files.push_back(name);
  manifest["outputs"] = std::move(files);
  json variants = json::array();
  for (std::size_t i = 0; i < edits.size(); ++i) {
    json v;
    v["file"] = "gamma_m_v" + std::to_string(i + 1) + ".s1p";
    v["label"] = edits[i].first;
    v["scale"] = edits[i].second;
    variants.push_back(std::move(v));
  }
  manifest["variants"] = std::move(variants);

  for (const auto& [name, trace] : outputs) {
    zprobe::write_file_atomic(fs::path(out_dir) / name,
                              zprobe::write_touchstone_1port(trace, zprobe::TouchstoneFormat::ri,
                                                             bench.z0.ohms()));
  }
  zprobe::write_file_atomic(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "wrote " << outputs.size() + 1 << " files to " << out_dir << "\n";
  return kExitOk;
}

int run_calibrate(const std::string& open_path, const std::string& short_path,
                  const std::string& load_path, double r_load, double z0_ohm,
                  const std::string& out_path, const std::string& label) {
  struct Input {
    const char* role;
    const std::string* path;
  };
  const Input inputs[3] = {{"open", &open_path}, {"short", &short_path}, {"load", &load_path}};

  zprobe::StandardsTriple triple;
  zprobe::ComplexTrace* slots[3] = {&triple.gamma_open, &triple.gamma_short,
                                    &triple.gamma_load};
  for (int i = 0; i < 3; ++i) {
    const fs::path p = resolve_input(*inputs[i].path);
    *slots[i] = zprobe::parse_touchstone_1port(zprobe::read_file(p)).trace;
    slots[i]->name = inputs[i].role;
  }

  for (int i = 1; i < 3; ++i) {
    const Eigen::Index mism = zprobe::first_grid_mismatch(triple.gamma_open.grid, slots[i]->grid);
    if (mism >= 0) {
      std::string msg = "standard '" + *inputs[i].path + "' is not on the grid of '" +
                        open_path + "'";
      if (mism < triple.gamma_open.grid.size() && mism < slots[i]->grid.size()) {
        msg += ": first differing frequency at point " + std::to_string(mism) + " (" +
               std::to_string(triple.gamma_open.grid[mism]) + " Hz vs " +
               std::to_string(slots[i]->grid[mism]) + " Hz)";
      } else {
        msg += ": point counts differ (" + std::to_string(triple.gamma_open.grid.size()) +
               " vs " + std::to_string(slots[i]->grid.size()) + ")";
      }
      throw zprobe::ValidationError(msg);
    }
  }

  zprobe::CalibrationSet cal =
      zprobe::solve_osl(triple, r_load, zprobe::ReferenceImpedance(z0_ohm));
  cal.label = label.empty() ? fs::path(out_path).filename().string() : label;

  const zprobe::ConditioningReport rep = zprobe::conditioning_report(cal, triple);
  std::cout << "calibration points: " << cal.size() << ", flagged: " << rep.flagged_count
            << "\n";
  if (rep.flagged_count > 0) {
    std::cerr << "warning: " << rep.flagged_count
              << " ill-conditioned point(s); bands:";
    for (const zprobe::FrequencyBand& b : rep.flagged_bands)
      std::cerr << " [" << b.f_lo_hz << ", " << b.f_hi_hz << "] Hz";
    std::cerr << "\n";
  }

  zprobe::write_file_atomic(out_path, zprobe::write_calibration(cal, utc_now()));
  return kExitOk;
}

int run_extract(const std::string& cal_path, const std::string& meas_path,
                const std::string& out_path, bool do_resample) {
  const zprobe::CalibrationSet cal =
      zprobe::read_calibration(zprobe::read_file(resolve_input(cal_path)));
  zprobe::ComplexTrace gamma =
      zprobe::parse_touchstone_1port(zprobe::read_file(resolve_input(meas_path))).trace;
  gamma.name = meas_path;

  if (!gamma.grid.identical(cal.grid)) {
    if (!do_resample) {
      throw zprobe::ValidationError(
          "measurement grid does not match the calibration grid; pass --resample to "
          "interpolate the measurement onto the calibration grid");
    }
    gamma = zprobe::resample(gamma, cal.grid);
  }

  zprobe::ImpedanceTrace z = zprobe::extract_impedance(gamma, cal);
  z.cal_id = cal_path;
  z.source_id = meas_path;

  Eigen::Index flagged = 0;
  for (zprobe::PointStatus s : z.status)
    if (s != zprobe::PointStatus::ok) ++flagged;
  std::cout << "extracted " << z.size() << " points, flagged: " << flagged << "\n";

  zprobe::write_file_atomic(out_path, zprobe::write_impedance_csv(z));
  return kExitOk;
}

int run_compare(const std::string& a_path, const std::string& b_path, double threshold_db,
                const std::string& out_path, bool fail_on_deviation) {
  const zprobe::ImpedanceTrace a =
      zprobe::parse_impedance_csv(zprobe::read_file(resolve_input(a_path)));
  const zprobe::ImpedanceTrace b =
      zprobe::parse_impedance_csv(zprobe::read_file(resolve_input(b_path)));

  const zprobe::CompareReport rep = zprobe::compare_traces(a, b, threshold_db);
  zprobe::write_file_atomic(out_path, zprobe::write_compare_report(rep));

  std::cout << "max |ratio| " << rep.max_abs_ratio_db << " dB, " << rep.band_count()
            << " deviation band(s)\n";
  for (const zprobe::FrequencyBand& band : rep.bands)
    std::cout << "band [" << band.f_lo_hz << ", " << band.f_hi_hz << "] Hz\n";

  if (fail_on_deviation && !rep.bands.empty()) return kExitDeviation;
  return kExitOk;
}

int run_convert(const std::string& in_path, const std::string& out_path,
                const std::string& format) {
  const fs::path in = resolve_input(in_path);
  const std::string text = zprobe::read_file(in);

  zprobe::ComplexTrace trace;
  double reference_ohm = 50.0;
  std::string ext = in.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".s1p") {
    zprobe::TouchstoneDocument doc = zprobe::parse_touchstone_1port(text);
    trace = std::move(doc.trace);
    reference_ohm = doc.reference_ohm;
  } else if (ext == ".csv") {
    trace = zprobe::parse_trace_csv(text);
  } else {
    throw zprobe::ValidationError("cannot determine input format of '" + in_path +
                                  "' (expected .s1p or .csv)");
  }

  std::string out;
  if (format == "csv") {
    out = zprobe::write_trace_csv(trace);
  } else {
    out = zprobe::write_touchstone_1port(trace, zprobe::touchstone_format_from_string(format),
                                         reference_ohm);
  }
  zprobe::write_file_atomic(out_path, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zprobe: in-circuit differential-mode impedance extraction toolkit"};
  app.require_subcommand(1);

  // simulate
  std::string bench_path, out_dir = ".";
  bool standards = false;
  bool allow_unknown_keys = false;
  std::vector<std::string> variant_specs;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Synthesize reflection traces for a bench description");
  simulate->add_option("bench", bench_path, "bench description file (JSON)")->required();
  simulate->add_option("-o,--out-dir", out_dir, "output directory");
  simulate->add_flag("--standards", standards, "also write open/short/load standards");
  simulate->add_option("--dut-variant", variant_specs,
                       "label=scale DUT variant (repeatable)");
  simulate->add_flag("--allow-unknown-keys", allow_unknown_keys,
                     "tolerate unknown keys in the bench file");

  // calibrate
  std::string open_path, short_path, load_path, cal_out, cal_label;
  double r_load = 50.0, z0_ohm = 50.0;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Solve calibration coefficients from OSL standards");
  calibrate->add_option("--open", open_path, "open-standard .s1p")->required();
  calibrate->add_option("--short", short_path, "short-standard .s1p")->required();
  calibrate->add_option("--load", load_path, "load-standard .s1p")->required();
  calibrate->add_option("--r-load", r_load, "load-standard resistance in ohm");
  calibrate->add_option("--z0", z0_ohm, "reference impedance in ohm");
  calibrate->add_option("--label", cal_label, "label stored in the calibration file");
  calibrate->add_option("-o,--out", cal_out, "output calibration file")->required();

  // extract
  std::string ext_cal, ext_meas, ext_out;
  bool ext_resample = false;
  CLI::App* extract =
      app.add_subcommand("extract", "Convert a measured reflection trace to impedance");
  extract->add_option("--cal", ext_cal, "calibration file")->required();
  extract->add_option("--meas", ext_meas, "measured reflection .s1p")->required();
  extract->add_option("-o,--out", ext_out, "output impedance CSV")->required();
  extract->add_flag("--resample", ext_resample,
                    "interpolate the measurement onto the calibration grid");

  // compare
  std::string cmp_a, cmp_b, cmp_out;
  double threshold_db = 3.0;
  bool fail_on_deviation = false;
  CLI::App* compare =
      app.add_subcommand("compare", "Compare two impedance CSVs and find deviation bands");
  compare->add_option("a", cmp_a, "first impedance CSV")->required();
  compare->add_option("b", cmp_b, "second impedance CSV")->required();
  compare->add_option("--threshold-db", threshold_db, "band threshold in dB");
  compare->add_option("-o,--out", cmp_out, "output report file")->required();
  compare->add_flag("--fail-on-deviation", fail_on_deviation,
                    "exit 3 when any deviation band exists");

  // convert
  std::string conv_in, conv_out, conv_format;
  CLI::App* convert = app.add_subcommand("convert", "Convert trace files between formats");
  convert->add_option("input", conv_in, "input file (.s1p or .csv)")->required();
  convert->add_option("output", conv_out, "output file")->required();
  convert->add_option("--format", conv_format, "output format")
      ->required()
      ->check(CLI::IsMember({"ri", "ma", "db", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (simulate->parsed())
      return run_simulate(bench_path, out_dir, standards, variant_specs, allow_unknown_keys);
    if (calibrate->parsed())
      return run_calibrate(open_path, short_path, load_path, r_load, z0_ohm, cal_out,
                           cal_label);
    if (extract->parsed()) return run_extract(ext_cal, ext_meas, ext_out, ext_resample);
    if (compare->parsed())
      return run_compare(cmp_a, cmp_b, threshold_db, cmp_out, fail_on_deviation);
    if (convert->parsed()) return run_convert(conv_in, conv_out, conv_format);
  } catch (const zprobe::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const zprobe::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
