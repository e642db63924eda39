#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zprobe/calib.hpp"
#include "zprobe/netcore.hpp"

namespace zprobe {

/// One node of a lumped element tree. Leaves are R/L/C (value in SI units);
/// groups combine children in series or parallel. A transmission line is a
/// two-port: it can only sit at the root of a loop branch, where the chain
/// builder cascades its ABCD instead of inserting a series impedance.
struct LoopElement {
  enum class Kind {
    resistor,
    inductor,
    capacitor,
    series_group,
    parallel_group,
    transmission_line,
  };

  Kind kind = Kind::resistor;
  double value = 0.0;            // ohm, henry, or farad depending on kind
  double z0_ohm = 0.0;           // transmission line only
  double length_m = 0.0;         // transmission line only
  double velocity_factor = 1.0;  // transmission line only
  std::string label;
  std::vector<LoopElement> children;

  static LoopElement resistor(double ohm, std::string label = {});
  static LoopElement inductor(double henry, std::string label = {});
  static LoopElement capacitor(double farad, std::string label = {});
  static LoopElement series(std::vector<LoopElement> children, std::string label = {});
  static LoopElement parallel(std::vector<LoopElement> children, std::string label = {});
  static LoopElement line(double z0_ohm, double length_m, double velocity_factor = 1.0,
                          std::string label = {});
};

const char* to_string(LoopElement::Kind k);
LoopElement::Kind element_kind_from_string(const std::string& name);

/// Throws ValidationError naming the offending node path.
void validate_element(const LoopElement& e, const std::string& path = "element");

/// Lumped impedance of the tree at every grid point. R -> R, L -> jwL,
/// C -> 1/(jwC), series -> sum, parallel -> reciprocal of summed reciprocals.
/// An exact parallel antiresonance flags the point open. Transmission lines
/// are not evaluable as a lumped impedance and are rejected.
ComplexTrace eval_element_impedance(const LoopElement& e, const FrequencyGrid& grid);

/// Clamp-on inductive probe: leakage inductance, parasitic capacitance, and
/// an ideal coupling transformer. The internal ordering of the three stages
/// is configurable; calibration absorbs any linear choice.
struct ProbeModel {
  enum class Stage { shunt_cp, series_llk, transformer };

  double leakage_inductance_h = 0.0;
  double parasitic_capacitance_f = 0.0;
  double turns_ratio = 1.0;
  std::vector<Stage> topology = default_topology();

  // Measurement-plane side first: parasitic capacitance across the port,
  // leakage inductance in series, then the ideal coupling transformer.
  static std::vector<Stage> default_topology() {
    return {Stage::shunt_cp, Stage::series_llk, Stage::transformer};
  }
};

ProbeModel::Stage probe_stage_from_string(const std::string& name);
const char* to_string(ProbeModel::Stage s);

void validate_probe(const ProbeModel& p);
AbcdNetwork probe_network(const ProbeModel& p, const FrequencyGrid& grid);

/// Additive complex Gaussian perturbation on reflection traces. sigma is the
/// total complex standard deviation (each component sigma/sqrt(2)). The
/// stream is a pure function of (seed, trace role, point index), so traces
/// are reproducible regardless of evaluation order.
struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// The simulated measurement bench: probe two-port, loop impedances on the
/// far side, a device-under-test element tree, and the sweep definition.
struct BenchModel {
  ProbeModel probe;
  std::optional<LoopElement> lisn;
  std::optional<LoopElement> cable;
  std::optional<LoopElement> dut;
  FrequencyGrid grid;
  ReferenceImpedance z0;
  NoiseModel noise;
};

void validate_bench(const BenchModel& b);

/// The full error two-port between the measurement plane and the DUT port:
/// probe, then half the cable, the loop impedance, and the other cable half.
AbcdNetwork build_chain(const BenchModel& b);

/// Reflection coefficient at the measurement plane with the DUT (or an
/// override tree) terminating the chain. Noise is applied when sigma > 0.
ComplexTrace synth_gamma(const BenchModel& b,
                         const std::optional<LoopElement>& dut_override = std::nullopt);

/// The open/short/load traces measured through the same chain. The open is
/// the analytic limit unless a finite open resistance is requested. Each
/// trace draws from its own noise substream.
StandardsTriple synth_standards(const BenchModel& b, double r_load_ohm = 50.0,
                                std::optional<double> finite_open_ohm = std::nullopt);

/// Variants of a DUT tree with labeled leaf values scaled. The unmodified
/// base is variant 0. Labels must resolve to R/L/C leaves.
std::vector<LoopElement> mode_variants(
    const LoopElement& base_dut, const std::vector<std::pair<std::string, double>>& edits);

}  // namespace zprobe
