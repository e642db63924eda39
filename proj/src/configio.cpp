#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

#include "zprobe/io.hpp"

namespace zprobe {

namespace {

using nlohmann::json;

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + end, '\n'));
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of_byte(text, e.byte), e.what());
  }
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError(path + ": " + message);
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed, bool strict) {
  if (!strict) return;
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      fail(path + "." + key, "unknown key");
    }
  }
}

const json* find_key(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double require_number(const json& obj, const char* key, const std::string& path) {
  const json* v = find_key(obj, key);
  if (!v) fail(path, "missing key '" + std::string(key) + "'");
  if (!v->is_number()) fail(path + "." + key, "expected a number");
  return v->get<double>();
}

double optional_number(const json& obj, const char* key, const std::string& path,
                       double fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(path + "." + key, "expected a number");
  return v->get<double>();
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  const json* v = find_key(obj, key);
  if (!v) fail(path, "missing key '" + std::string(key) + "'");
  if (!v->is_string()) fail(path + "." + key, "expected a string");
  return v->get<std::string>();
}

// ---------------------------------------------------------------------------
// Bench description

LoopElement parse_element(const json& j, const std::string& path, bool strict);

std::vector<LoopElement> parse_element_list(const json& j, const std::string& path,
                                            bool strict) {
  if (!j.is_array()) fail(path, "expected an array of elements");
  std::vector<LoopElement> out;
  out.reserve(j.size());
  std::size_t i = 0;
  for (const json& item : j)
    out.push_back(parse_element(item, path + "[" + std::to_string(i++) + "]", strict));
  return out;
}

LoopElement parse_element(const json& j, const std::string& path, bool strict) {
  require_object(j, path);
  const std::string kind_name = require_string(j, "kind", path);
  LoopElement::Kind kind;
  try {
    kind = element_kind_from_string(kind_name);
  } catch (const ValidationError&) {
    fail(path + ".kind", "unknown element kind '" + kind_name + "'");
  }

  LoopElement e;
  e.kind = kind;
  if (const json* label = find_key(j, "label")) {
    if (!label->is_string()) fail(path + ".label", "expected a string");
    e.label = label->get<std::string>();
  }

  switch (kind) {
    case LoopElement::Kind::resistor:
      check_keys(j, path, {"kind", "label", "ohm"}, strict);
      e.value = require_number(j, "ohm", path);
      break;
    case LoopElement::Kind::inductor:
      check_keys(j, path, {"kind", "label", "henry"}, strict);
      e.value = require_number(j, "henry", path);
      break;
    case LoopElement::Kind::capacitor:
      check_keys(j, path, {"kind", "label", "farad"}, strict);
      e.value = require_number(j, "farad", path);
      break;
    case LoopElement::Kind::series_group:
    case LoopElement::Kind::parallel_group: {
      check_keys(j, path, {"kind", "label", "elements"}, strict);
      const json* children = find_key(j, "elements");
      if (!children) fail(path, "missing key 'elements'");
      e.children = parse_element_list(*children, path + ".elements", strict);
      break;
    }
    case LoopElement::Kind::transmission_line:
      check_keys(j, path, {"kind", "label", "z0_ohm", "length_m", "vf"}, strict);
      e.z0_ohm = require_number(j, "z0_ohm", path);
      e.length_m = require_number(j, "length_m", path);
      e.velocity_factor = optional_number(j, "vf", path, 1.0);
      break;
  }
  return e;
}

std::optional<LoopElement> parse_element_block(const json& obj, const char* key,
                                               const std::string& path, bool strict) {
  const json* block = find_key(obj, key);
  if (!block) return std::nullopt;
  require_object(*block, path);
  check_keys(*block, path, {"elements"}, strict);
  const json* elements = find_key(*block, "elements");
  if (!elements) fail(path, "missing key 'elements'");
  std::vector<LoopElement> list = parse_element_list(*elements, path + ".elements", strict);
  if (list.empty()) return std::nullopt;
  if (list.size() == 1) return std::move(list.front());
  return LoopElement::series(std::move(list));  // several entries act in series
}

json element_to_json(const LoopElement& e) {
  json j;
  j["kind"] = to_string(e.kind);
  if (!e.label.empty()) j["label"] = e.label;
  switch (e.kind) {
    case LoopElement::Kind::resistor: j["ohm"] = e.value; break;
    case LoopElement::Kind::inductor: j["henry"] = e.value; break;
    case LoopElement::Kind::capacitor: j["farad"] = e.value; break;
    case LoopElement::Kind::series_group:
    case LoopElement::Kind::parallel_group: {
      json children = json::array();
      for (const LoopElement& child : e.children) children.push_back(element_to_json(child));
      j["elements"] = std::move(children);
      break;
    }
    case LoopElement::Kind::transmission_line:
      j["z0_ohm"] = e.z0_ohm;
      j["length_m"] = e.length_m;
      j["vf"] = e.velocity_factor;
      break;
  }
  return j;
}

}  // namespace

BenchModel read_bench_config(std::string_view text, bool strict) {
  const json root = parse_json(text);
  require_object(root, "bench");
  check_keys(root, "bench",
             {"schema", "version", "probe", "lisn", "cable", "dut", "sweep", "z0", "noise"},
             strict);

  if (const json* schema = find_key(root, "schema")) {
    if (!schema->is_string() || schema->get<std::string>() != "zprobe-bench")
      fail("bench.schema", "expected \"zprobe-bench\"");
  }
  if (const json* version = find_key(root, "version")) {
    if (!version->is_number_integer() || version->get<int>() != 1)
      fail("bench.version", "unsupported version (expected 1)");
  }

  BenchModel b;

  const json* probe = find_key(root, "probe");
  if (!probe) fail("bench", "missing key 'probe'");
  require_object(*probe, "probe");
  check_keys(*probe, "probe", {"l_lk_h", "c_p_f", "n", "topology"}, strict);
  b.probe.leakage_inductance_h = require_number(*probe, "l_lk_h", "probe");
  b.probe.parasitic_capacitance_f = require_number(*probe, "c_p_f", "probe");
  b.probe.turns_ratio = require_number(*probe, "n", "probe");
  if (const json* topology = find_key(*probe, "topology")) {
    if (!topology->is_array()) fail("probe.topology", "expected an array of stage names");
    b.probe.topology.clear();
    std::size_t i = 0;
    for (const json& stage : *topology) {
      const std::string where = "probe.topology[" + std::to_string(i++) + "]";
      if (!stage.is_string()) fail(where, "expected a string");
      try {
        b.probe.topology.push_back(probe_stage_from_string(stage.get<std::string>()));
      } catch (const ValidationError&) {
        fail(where, "unknown probe stage '" + stage.get<std::string>() + "'");
      }
    }
  }

  b.lisn = parse_element_block(root, "lisn", "lisn", strict);
  b.cable = parse_element_block(root, "cable", "cable", strict);
  b.dut = parse_element_block(root, "dut", "dut", strict);

  const json* sweep = find_key(root, "sweep");
  if (!sweep) fail("bench", "missing key 'sweep'");
  require_object(*sweep, "sweep");
  check_keys(*sweep, "sweep", {"f_start_hz", "f_stop_hz", "n_points", "spacing"}, strict);
  const double f_start = require_number(*sweep, "f_start_hz", "sweep");
  const double f_stop = require_number(*sweep, "f_stop_hz", "sweep");
  const json* n_points = find_key(*sweep, "n_points");
  if (!n_points) fail("sweep", "missing key 'n_points'");
  if (!n_points->is_number_integer() || n_points->get<long long>() < 2)
    fail("sweep.n_points", "expected an integer >= 2");
  std::string spacing = "log";
  if (const json* sp = find_key(*sweep, "spacing")) {
    if (!sp->is_string()) fail("sweep.spacing", "expected a string");
    spacing = sp->get<std::string>();
    if (spacing != "log" && spacing != "linear")
      fail("sweep.spacing", "expected \"log\" or \"linear\"");
  }
  try {
    const Eigen::Index n = static_cast<Eigen::Index>(n_points->get<long long>());
    b.grid = spacing == "log" ? FrequencyGrid::log_spaced(f_start, f_stop, n)
                              : FrequencyGrid::linear_spaced(f_start, f_stop, n);
  } catch (const ValidationError& e) {
    fail("sweep", e.what());
  }

  const double z0 = optional_number(root, "z0", "bench", 50.0);
  try {
    b.z0 = ReferenceImpedance(z0);
  } catch (const ValidationError& e) {
    fail("bench.z0", e.what());
  }

  if (const json* noise = find_key(root, "noise")) {
    require_object(*noise, "noise");
    check_keys(*noise, "noise", {"sigma", "seed"}, strict);
    b.noise.sigma = optional_number(*noise, "sigma", "noise", 0.0);
    if (!(b.noise.sigma >= 0.0)) fail("noise.sigma", "must be >= 0");
    if (const json* seed = find_key(*noise, "seed")) {
      if (!seed->is_number_integer() || seed->get<long long>() < 0)
        fail("noise.seed", "expected a non-negative integer");
      b.noise.seed = static_cast<std::uint64_t>(seed->get<long long>());
    }
  }

  validate_bench(b);
  return b;
}

std::string write_bench_config(const BenchModel& b) {
  json root;
  root["schema"] = "zprobe-bench";
  root["version"] = 1;

  json probe;
  probe["l_lk_h"] = b.probe.leakage_inductance_h;
  probe["c_p_f"] = b.probe.parasitic_capacitance_f;
  probe["n"] = b.probe.turns_ratio;
  json topology = json::array();
  for (ProbeModel::Stage s : b.probe.topology) topology.push_back(to_string(s));
  probe["topology"] = std::move(topology);
  root["probe"] = std::move(probe);

  const auto block = [](const std::optional<LoopElement>& e) {
    json b_;
    json elements = json::array();
    if (e) elements.push_back(element_to_json(*e));
    b_["elements"] = std::move(elements);
    return b_;
  };
  if (b.lisn) root["lisn"] = block(b.lisn);
  if (b.cable) root["cable"] = block(b.cable);
  if (b.dut) root["dut"] = block(b.dut);

  // Grids written back as explicit sweeps; emit the bounds and spacing that
  // regenerate the same grid.
  json sweep;
  sweep["f_start_hz"] = b.grid.front();
  sweep["f_stop_hz"] = b.grid.back();
  sweep["n_points"] = static_cast<long long>(b.grid.size());
  bool log_spacing = true;
  if (b.grid.size() >= 3) {
    const double lin_step = b.grid[1] - b.grid[0];
    const double lin_mid = b.grid.front() + lin_step;
    log_spacing = std::abs(b.grid[1] - lin_mid) > 1e-9 * b.grid[1] ||
                  std::abs((b.grid[2] - b.grid[1]) - lin_step) > 1e-9 * b.grid[2];
  }
  sweep["spacing"] = log_spacing ? "log" : "linear";
  root["sweep"] = std::move(sweep);

  root["z0"] = b.z0.ohms();
  json noise;
  noise["sigma"] = b.noise.sigma;
  noise["seed"] = b.noise.seed;
  root["noise"] = std::move(noise);

  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Calibration files

std::string write_calibration(const CalibrationSet& cal, const std::string& created_utc) {
  json root;
  root["schema"] = "zprobe-calibration";
  root["version"] = 1;
  if (!cal.label.empty()) root["label"] = cal.label;
  if (!created_utc.empty()) root["created_utc"] = created_utc;
  root["resampled"] = cal.resampled;
  root["z0_ohm"] = cal.z0.ohms();
  root["r_load_ohm"] = cal.r_load_ohm;

  json freq = json::array();
  for (Eigen::Index i = 0; i < cal.grid.size(); ++i) freq.push_back(cal.grid[i]);
  root["freq_hz"] = std::move(freq);

  const auto coeff = [](const Eigen::ArrayXcd& k) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < k.size(); ++i)
      arr.push_back(json::array({k[i].real(), k[i].imag()}));
    return arr;
  };
  root["k1"] = coeff(cal.k1);
  root["k2"] = coeff(cal.k2);
  root["k3"] = coeff(cal.k3);

  json flags = json::array();
  for (PointStatus s : cal.flags) flags.push_back(to_string(s));
  root["flags"] = std::move(flags);

  return root.dump(2) + "\n";
}

CalibrationSet read_calibration(std::string_view text) {
  const json root = parse_json(text);
  require_object(root, "calibration");

  if (require_string(root, "schema", "calibration") != "zprobe-calibration")
    fail("calibration.schema", "expected \"zprobe-calibration\"");
  const json* version = find_key(root, "version");
  if (!version || !version->is_number_integer() || version->get<int>() != 1)
    fail("calibration.version", "unsupported version (expected 1)");

  CalibrationSet cal;
  if (const json* label = find_key(root, "label")) {
    if (!label->is_string()) fail("calibration.label", "expected a string");
    cal.label = label->get<std::string>();
  }
  if (const json* resampled = find_key(root, "resampled")) {
    if (!resampled->is_boolean()) fail("calibration.resampled", "expected a boolean");
    cal.resampled = resampled->get<bool>();
  }
  try {
    cal.z0 = ReferenceImpedance(require_number(root, "z0_ohm", "calibration"));
  } catch (const ValidationError& e) {
    fail("calibration.z0_ohm", e.what());
  }
  cal.r_load_ohm = require_number(root, "r_load_ohm", "calibration");
  if (!(cal.r_load_ohm > 0.0)) fail("calibration.r_load_ohm", "must be > 0");

  const json* freq = find_key(root, "freq_hz");
  if (!freq || !freq->is_array()) fail("calibration.freq_hz", "expected an array");
  Eigen::ArrayXd pts(static_cast<Eigen::Index>(freq->size()));
  Eigen::Index i = 0;
  for (const json& f : *freq) {
    if (!f.is_number()) fail("calibration.freq_hz", "expected numbers");
    pts[i++] = f.get<double>();
  }
  try {
    cal.grid = FrequencyGrid(pts);
  } catch (const ValidationError& e) {
    fail("calibration.freq_hz", e.what());
  }

  const auto coeff = [&](const char* key) {
    const json* arr = find_key(root, key);
    if (!arr || !arr->is_array()) fail("calibration." + std::string(key), "expected an array");
    if (arr->size() != static_cast<std::size_t>(cal.grid.size()))
      fail("calibration." + std::string(key), "length does not match freq_hz");
    Eigen::ArrayXcd k(cal.grid.size());
    Eigen::Index n = 0;
    for (const json& pair : *arr) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
        fail("calibration." + std::string(key), "expected [re, im] pairs");
      k[n++] = Complex(pair[0].get<double>(), pair[1].get<double>());
    }
    return k;
  };
  cal.k1 = coeff("k1");
  cal.k2 = coeff("k2");
  cal.k3 = coeff("k3");

  const json* flags = find_key(root, "flags");
  if (!flags || !flags->is_array()) fail("calibration.flags", "expected an array");
  if (flags->size() != static_cast<std::size_t>(cal.grid.size()))
    fail("calibration.flags", "length does not match freq_hz");
  cal.flags.reserve(flags->size());
  for (const json& flag : *flags) {
    if (!flag.is_string()) fail("calibration.flags", "expected status strings");
    try {
      cal.flags.push_back(point_status_from_string(flag.get<std::string>()));
    } catch (const ValidationError& e) {
      fail("calibration.flags", e.what());
    }
  }
  return cal;
}

}  // namespace zprobe
