// Black-box tests of the command-line tool: exit codes, file outputs, and
// determinism, exercised through a shell exactly as a user would.

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "test_helpers.hpp"
#include "zprobe/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = ZPROBE_CLI_PATH;
const std::string kDataDir = ZPROBE_DATA_DIR;

struct Sandbox {
  fs::path dir;

  Sandbox() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("zprobe_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Sandbox() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) { return zprobe::read_file(p); }

void dump(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

const std::string kExampleBench = kDataDir + "/example_bench.json";

}  // namespace

TEST_CASE("cli: simulate writes standards, manifest, and is deterministic") {
  Sandbox box;
  const std::string out1 = box.path("run1");
  const std::string out2 = box.path("run2");

  REQUIRE(run("simulate " + kExampleBench + " --standards -o " + out1) == 0);
  REQUIRE(run("simulate " + kExampleBench + " --standards -o " + out2) == 0);

  for (const char* name : {"gamma_m.s1p", "open.s1p", "short.s1p", "load.s1p",
                           "manifest.json"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(fs::path(out1) / name));
    CHECK(slurp(fs::path(out1) / name) == slurp(fs::path(out2) / name));
  }

  const json manifest = json::parse(slurp(fs::path(out1) / "manifest.json"));
  CHECK(manifest.at("schema") == "zprobe-manifest");
  CHECK(manifest.at("seed") == 12345);
  CHECK(manifest.at("bench_hash_fnv1a64").get<std::string>().starts_with("0x"));
  CHECK(manifest.at("outputs").size() == 4);
}

TEST_CASE("cli: simulate rejects a bad bench with exit 2 and no partial files") {
  Sandbox box;
  const std::string bad = box.path("bad_bench.json");
  dump(bad, R"({"probe": {"l_lk_h": 0.0, "c_p_f": 0.0, "n": 1.0}})");  // no sweep
  const std::string out = box.path("out");
  CHECK(run("simulate " + bad + " --standards -o " + out) == 2);
  CHECK_FALSE(fs::exists(out));

  // unreadable input path is an I/O failure
  CHECK(run("simulate " + box.path("missing.json") + " -o " + out) == 1);
}

TEST_CASE("cli: full pipeline recovers the bench DUT impedance") {
  Sandbox box;
  const std::string out = box.path("sim");
  REQUIRE(run("simulate " + kExampleBench + " --standards -o " + out) == 0);

  const std::string cal = box.path("cal.json");
  REQUIRE(run("calibrate --open " + out + "/open.s1p --short " + out + "/short.s1p --load " +
              out + "/load.s1p -o " + cal) == 0);

  const std::string csv = box.path("z.csv");
  REQUIRE(run("extract --cal " + cal + " --meas " + out + "/gamma_m.s1p -o " + csv) == 0);

  const zprobe::ImpedanceTrace z = zprobe::parse_impedance_csv(slurp(csv));
  const zprobe::BenchModel bench = zprobe::read_bench_config(slurp(kExampleBench));
  REQUIRE(z.size() == bench.grid.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z.status[i] != zprobe::PointStatus::ok) continue;
    CHECK(helpers::rel_err(z.z[i], helpers::naive_impedance(*bench.dut, bench.grid[i])) <
          1e-9);
  }
}

TEST_CASE("cli: calibrate names the mismatching standard") {
  Sandbox box;
  const std::string out = box.path("sim");
  REQUIRE(run("simulate " + kExampleBench + " --standards -o " + out) == 0);

  // shift the load standard onto a different grid
  zprobe::TouchstoneDocument doc =
      zprobe::parse_touchstone_1port(slurp(fs::path(out) / "load.s1p"));
  Eigen::ArrayXd pts = doc.trace.grid.points_hz();
  pts *= 1.001;
  const zprobe::ComplexTrace shifted(zprobe::FrequencyGrid(pts), doc.trace.values);
  dump(fs::path(out) / "load_shifted.s1p", zprobe::write_touchstone_1port(shifted));

  CHECK(run("calibrate --open " + out + "/open.s1p --short " + out + "/short.s1p --load " +
            out + "/load_shifted.s1p -o " + box.path("cal.json")) == 2);
}

TEST_CASE("cli: extract without matching grids needs --resample") {
  Sandbox box;
  const std::string out = box.path("sim");
  REQUIRE(run("simulate " + kExampleBench + " --standards -o " + out) == 0);
  const std::string cal = box.path("cal.json");
  REQUIRE(run("calibrate --open " + out + "/open.s1p --short " + out + "/short.s1p --load " +
              out + "/load.s1p -o " + cal) == 0);

  // denser sweep of the same bench
  json bench = json::parse(slurp(kExampleBench));
  bench["sweep"]["n_points"] = 401;
  const std::string dense_bench = box.path("dense_bench.json");
  dump(dense_bench, bench.dump(2));
  const std::string dense_out = box.path("dense");
  REQUIRE(run("simulate " + dense_bench + " -o " + dense_out) == 0);

  const std::string csv = box.path("z_dense.csv");
  CHECK(run("extract --cal " + cal + " --meas " + dense_out + "/gamma_m.s1p -o " + csv) == 2);
  REQUIRE(run("extract --cal " + cal + " --meas " + dense_out + "/gamma_m.s1p --resample -o " +
              csv) == 0);

  const std::string text = slurp(csv);
  CHECK(text.find("# resampled") != std::string::npos);
  const zprobe::ImpedanceTrace z = zprobe::parse_impedance_csv(text);
  CHECK(z.resampled);
  CHECK(z.size() == 201);
}

TEST_CASE("cli: compare exit codes and deviation detection") {
  Sandbox box;
  const std::string out = box.path("sim");
  REQUIRE(run("simulate " + kExampleBench + " --standards --dut-variant c_dclink=1.2 -o " +
              out) == 0);
  const std::string cal = box.path("cal.json");
  REQUIRE(run("calibrate --open " + out + "/open.s1p --short " + out + "/short.s1p --load " +
              out + "/load.s1p -o " + cal) == 0);

  const std::string base_csv = box.path("base.csv");
  const std::string variant_csv = box.path("variant.csv");
  REQUIRE(run("extract --cal " + cal + " --meas " + out + "/gamma_m.s1p -o " + base_csv) == 0);
  REQUIRE(run("extract --cal " + cal + " --meas " + out + "/gamma_m_v1.s1p -o " +
              variant_csv) == 0);

  // identical inputs: no bands, exit 0 either way
  CHECK(run("compare " + base_csv + " " + base_csv + " -o " + box.path("self.csv")) == 0);
  CHECK(run("compare " + base_csv + " " + base_csv + " --fail-on-deviation -o " +
            box.path("self2.csv")) == 0);

  // scaled reactive element: bands exist; exit 0 by default, 3 on request
  CHECK(run("compare " + base_csv + " " + variant_csv + " -o " + box.path("dev.csv")) == 0);
  CHECK(run("compare " + base_csv + " " + variant_csv + " --fail-on-deviation -o " +
            box.path("dev2.csv")) == 3);

  const std::string report = slurp(box.path("dev.csv"));
  CHECK(report.find("# band ") != std::string::npos);

  // grid mismatch is a validation failure
  json bench = json::parse(slurp(kExampleBench));
  bench["sweep"]["n_points"] = 101;
  const std::string coarse_bench = box.path("coarse.json");
  dump(coarse_bench, bench.dump(2));
  const std::string coarse_out = box.path("coarse");
  REQUIRE(run("simulate " + coarse_bench + " --standards -o " + coarse_out) == 0);
  const std::string coarse_cal = box.path("coarse_cal.json");
  REQUIRE(run("calibrate --open " + coarse_out + "/open.s1p --short " + coarse_out +
              "/short.s1p --load " + coarse_out + "/load.s1p -o " + coarse_cal) == 0);
  const std::string coarse_csv = box.path("coarse.csv");
  REQUIRE(run("extract --cal " + coarse_cal + " --meas " + coarse_out + "/gamma_m.s1p -o " +
              coarse_csv) == 0);
  CHECK(run("compare " + base_csv + " " + coarse_csv + " -o " + box.path("bad.csv")) == 2);
}

TEST_CASE("cli: convert round trips") {
  Sandbox box;
  const std::string out = box.path("sim");
  REQUIRE(run("simulate " + kExampleBench + " -o " + out) == 0);
  const std::string src = out + "/gamma_m.s1p";

  REQUIRE(run("convert " + src + " " + box.path("g.ma.s1p") + " --format ma") == 0);
  REQUIRE(run("convert " + box.path("g.ma.s1p") + " " + box.path("g.ri.s1p") +
              " --format ri") == 0);
  REQUIRE(run("convert " + box.path("g.ri.s1p") + " " + box.path("g.csv") +
              " --format csv") == 0);
  REQUIRE(run("convert " + box.path("g.csv") + " " + box.path("g2.s1p") +
              " --format ri") == 0);

  const zprobe::ComplexTrace original = zprobe::parse_touchstone_1port(slurp(src)).trace;
  const zprobe::ComplexTrace chained =
      zprobe::parse_touchstone_1port(slurp(box.path("g2.s1p"))).trace;
  REQUIRE(chained.size() == original.size());
  for (Eigen::Index i = 0; i < original.size(); ++i)
    CHECK(helpers::rel_err(original.values[i], chained.values[i]) < 1e-9);

  // unknown output format is a usage error
  CHECK(run("convert " + src + " " + box.path("x") + " --format xyz") == 2);

  // empty-data file converts to empty-data file
  dump(box.path("empty.s1p"), "# Hz S RI R 50\n");
  REQUIRE(run("convert " + box.path("empty.s1p") + " " + box.path("empty_out.s1p") +
              " --format ma") == 0);
  CHECK(slurp(box.path("empty_out.s1p")) == "# Hz S MA R 50\n");
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("simulate") == 2);  // missing bench argument
}

TEST_CASE("cli: ZPROBE_CONFIG_DIR resolves bare input names") {
  Sandbox box;
  const std::string cmd = "ZPROBE_CONFIG_DIR=" + kDataDir + " " + kCli +
                          " simulate example_bench.json -o " + box.path("out") +
                          " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(box.dir / "out" / "gamma_m.s1p"));
}

TEST_CASE("cli: noisy benches are byte-reproducible under one seed") {
  Sandbox box;
  json bench = json::parse(slurp(kExampleBench));
  bench["noise"]["sigma"] = 1e-3;
  bench["noise"]["seed"] = 99;
  const std::string noisy = box.path("noisy.json");
  dump(noisy, bench.dump(2));

  REQUIRE(run("simulate " + noisy + " --standards -o " + box.path("a")) == 0);
  REQUIRE(run("simulate " + noisy + " --standards -o " + box.path("b")) == 0);
  for (const char* name : {"gamma_m.s1p", "open.s1p", "short.s1p", "load.s1p"})
    CHECK(slurp(box.dir / "a" / name) == slurp(box.dir / "b" / name));

  // and a different seed changes the data
  bench["noise"]["seed"] = 100;
  dump(noisy, bench.dump(2));
  REQUIRE(run("simulate " + noisy + " --standards -o " + box.path("c")) == 0);
  CHECK(slurp(box.dir / "a" / "gamma_m.s1p") != slurp(box.dir / "c" / "gamma_m.s1p"));
}

TEST_CASE("cli: calibrate flags a degenerate point but still succeeds") {
  Sandbox box;
  const zprobe::FrequencyGrid g = zprobe::FrequencyGrid::log_spaced(150e3, 30e6, 11);
  Eigen::ArrayXcd load_vals = Eigen::ArrayXcd::Zero(g.size());
  load_vals[5] = zprobe::Complex(-1, 0);  // collides with the short standard

  dump(box.path("open.s1p"),
       zprobe::write_touchstone_1port(zprobe::constant_trace(g, zprobe::Complex(1, 0))));
  dump(box.path("short.s1p"),
       zprobe::write_touchstone_1port(zprobe::constant_trace(g, zprobe::Complex(-1, 0))));
  dump(box.path("load.s1p"),
       zprobe::write_touchstone_1port(zprobe::ComplexTrace(g, load_vals)));

  const std::string cal_path = box.path("cal.json");
  CHECK(run("calibrate --open " + box.path("open.s1p") + " --short " + box.path("short.s1p") +
            " --load " + box.path("load.s1p") + " --r-load 75 -o " + cal_path) == 0);

  const zprobe::CalibrationSet cal = zprobe::read_calibration(slurp(cal_path));
  CHECK(cal.r_load_ohm == 75.0);
  CHECK(cal.flags[5] == zprobe::PointStatus::ill_conditioned);
  CHECK(cal.flags[4] == zprobe::PointStatus::ok);
}

TEST_CASE("cli: extracting the open standard flags every point near-open") {
  Sandbox box;
  const std::string out = box.path("sim");
  REQUIRE(run("simulate " + kExampleBench + " --standards -o " + out) == 0);
  const std::string cal = box.path("cal.json");
  REQUIRE(run("calibrate --open " + out + "/open.s1p --short " + out + "/short.s1p --load " +
              out + "/load.s1p -o " + cal) == 0);

  const std::string csv = box.path("open_z.csv");
  REQUIRE(run("extract --cal " + cal + " --meas " + out + "/open.s1p -o " + csv) == 0);
  const zprobe::ImpedanceTrace z = zprobe::parse_impedance_csv(slurp(csv));
  for (Eigen::Index i = 0; i < z.size(); ++i)
    CHECK(z.status[i] == zprobe::PointStatus::near_open);
}
