#include "zprobe/benchsim.hpp"

#include <cmath>
#include <numbers>

namespace zprobe {

namespace {

// Deterministic per-point noise stream: splitmix64 keyed on
// (seed, role, point index), shaped by Box-Muller. Independent of any
// stateful engine so parallel or reordered evaluation cannot change results.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double to_unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Complex gaussian_pair(std::uint64_t seed, std::uint32_t role, std::uint64_t index) {
  std::uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * (role + 1u)) ^
                        (0x8cb92ba72f3d8dd7ULL * (index + 1u));
  double u1 = to_unit_double(splitmix64(state));
  const double u2 = to_unit_double(splitmix64(state));
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return Complex(r * std::cos(phi), r * std::sin(phi));
}

enum TraceRole : std::uint32_t { role_measurement = 0, role_open = 1, role_short = 2, role_load = 3 };

void apply_gamma_noise(ComplexTrace& trace, const NoiseModel& noise, std::uint32_t role) {
  if (noise.sigma <= 0.0) return;
  const double scale = noise.sigma * std::numbers::sqrt2 / 2.0;  // sigma/sqrt(2) per component
  for (Eigen::Index i = 0; i < trace.size(); ++i) {
    if (trace.status[static_cast<std::size_t>(i)] != PointStatus::ok) continue;
    trace.values[i] += scale * gaussian_pair(noise.seed, role, static_cast<std::uint64_t>(i));
  }
}

void require_positive(double v, const std::string& path, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ValidationError(path + ": " + what + " must be positive and finite");
}

// Impedance of one node at a single angular frequency. Returns nullopt for
// an exact antiresonance (zero admittance), i.e. an ideal open.
std::optional<Complex> node_impedance(const LoopElement& e, double omega) {
  switch (e.kind) {
    case LoopElement::Kind::resistor:
      return Complex(e.value, 0.0);
    case LoopElement::Kind::inductor:
      return Complex(0.0, omega * e.value);
    case LoopElement::Kind::capacitor:
      return Complex(0.0, -1.0 / (omega * e.value));
    case LoopElement::Kind::series_group: {
      Complex sum(0.0, 0.0);
      for (const LoopElement& child : e.children) {
        const auto z = node_impedance(child, omega);
        if (!z) return std::nullopt;  // open in series dominates
        sum += *z;
      }
      return sum;
    }
    case LoopElement::Kind::parallel_group: {
      Complex y(0.0, 0.0);
      for (const LoopElement& child : e.children) {
        const auto z = node_impedance(child, omega);
        if (!z) continue;  // open branch draws nothing
        if (std::abs(*z) < kSingularFloor) return Complex(0.0, 0.0);  // shorted branch
        y += Complex(1.0, 0.0) / *z;
      }
      if (std::abs(y) < kSingularFloor) return std::nullopt;  // exact antiresonance
      return Complex(1.0, 0.0) / y;
    }
    case LoopElement::Kind::transmission_line:
      throw ValidationError(
          "transmission-line is a cascade element and has no lumped impedance");
  }
  throw ValidationError("unknown element kind");
}

}  // namespace

LoopElement LoopElement::resistor(double ohm, std::string label) {
  LoopElement e;
  e.kind = Kind::resistor;
  e.value = ohm;
  e.label = std::move(label);
  return e;
}

LoopElement LoopElement::inductor(double henry, std::string label) {
  LoopElement e;
  e.kind = Kind::inductor;
  e.value = henry;
  e.label = std::move(label);
  return e;
}

LoopElement LoopElement::capacitor(double farad, std::string label) {
  LoopElement e;
  e.kind = Kind::capacitor;
  e.value = farad;
  e.label = std::move(label);
  return e;
}

LoopElement LoopElement::series(std::vector<LoopElement> children, std::string label) {
  LoopElement e;
  e.kind = Kind::series_group;
  e.children = std::move(children);
  e.label = std::move(label);
  return e;
}

LoopElement LoopElement::parallel(std::vector<LoopElement> children, std::string label) {
  LoopElement e;
  e.kind = Kind::parallel_group;
  e.children = std::move(children);
  e.label = std::move(label);
  return e;
}

LoopElement LoopElement::line(double z0_ohm, double length_m, double velocity_factor,
                              std::string label) {
  LoopElement e;
  e.kind = Kind::transmission_line;
  e.z0_ohm = z0_ohm;
  e.length_m = length_m;
  e.velocity_factor = velocity_factor;
  e.label = std::move(label);
  return e;
}

const char* to_string(LoopElement::Kind k) {
  switch (k) {
    case LoopElement::Kind::resistor: return "resistor";
    case LoopElement::Kind::inductor: return "inductor";
    case LoopElement::Kind::capacitor: return "capacitor";
    case LoopElement::Kind::series_group: return "series-group";
    case LoopElement::Kind::parallel_group: return "parallel-group";
    case LoopElement::Kind::transmission_line: return "transmission-line";
  }
  return "unknown";
}

LoopElement::Kind element_kind_from_string(const std::string& name) {
  if (name == "resistor") return LoopElement::Kind::resistor;
  if (name == "inductor") return LoopElement::Kind::inductor;
  if (name == "capacitor") return LoopElement::Kind::capacitor;
  if (name == "series-group") return LoopElement::Kind::series_group;
  if (name == "parallel-group") return LoopElement::Kind::parallel_group;
  if (name == "transmission-line") return LoopElement::Kind::transmission_line;
  throw ValidationError("unknown element kind '" + name + "'");
}

void validate_element(const LoopElement& e, const std::string& path) {
  switch (e.kind) {
    case LoopElement::Kind::resistor:
    case LoopElement::Kind::inductor:
    case LoopElement::Kind::capacitor:
      require_positive(e.value, path, "element value");
      if (!e.children.empty())
        throw ValidationError(path + ": leaf element cannot have children");
      break;
    case LoopElement::Kind::series_group:
    case LoopElement::Kind::parallel_group: {
      if (e.children.empty()) throw ValidationError(path + ": empty group");
      std::size_t i = 0;
      for (const LoopElement& child : e.children)
        validate_element(child, path + ".elements[" + std::to_string(i++) + "]");
      break;
    }
    case LoopElement::Kind::transmission_line:
      require_positive(e.z0_ohm, path, "characteristic impedance");
      require_positive(e.length_m, path, "length");
      if (!(e.velocity_factor > 0.0) || e.velocity_factor > 1.0)
        throw ValidationError(path + ": velocity factor must be in (0, 1]");
      if (!e.children.empty())
        throw ValidationError(path + ": transmission line cannot have children");
      break;
  }
}

ComplexTrace eval_element_impedance(const LoopElement& e, const FrequencyGrid& grid) {
  if (grid.empty()) throw ValidationError("eval_element_impedance: empty grid");
  validate_element(e);

  const Eigen::Index n = grid.size();
  Eigen::ArrayXcd z(n);
  std::vector<PointStatus> status(static_cast<std::size_t>(n), PointStatus::ok);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double omega = 2.0 * std::numbers::pi * grid[i];
    const auto zi = node_impedance(e, omega);
    if (zi) {
      z[i] = *zi;
    } else {
      z[i] = Complex(0.0, 0.0);
      status[static_cast<std::size_t>(i)] = PointStatus::open;
    }
  }
  return ComplexTrace(grid, std::move(z), std::move(status));
}

ProbeModel::Stage probe_stage_from_string(const std::string& name) {
  if (name == "shunt_cp") return ProbeModel::Stage::shunt_cp;
  if (name == "series_llk") return ProbeModel::Stage::series_llk;
  if (name == "transformer") return ProbeModel::Stage::transformer;
  throw ValidationError("unknown probe stage '" + name + "'");
}

const char* to_string(ProbeModel::Stage s) {
  switch (s) {
    case ProbeModel::Stage::shunt_cp: return "shunt_cp";
    case ProbeModel::Stage::series_llk: return "series_llk";
    case ProbeModel::Stage::transformer: return "transformer";
  }
  return "unknown";
}

void validate_probe(const ProbeModel& p) {
  // The zero limits are the idealized probe used by identity-chain setups.
  if (!(p.leakage_inductance_h >= 0.0) || !std::isfinite(p.leakage_inductance_h))
    throw ValidationError("probe: leakage inductance must be >= 0");
  if (!(p.parasitic_capacitance_f >= 0.0) || !std::isfinite(p.parasitic_capacitance_f))
    throw ValidationError("probe: parasitic capacitance must be >= 0");
  if (!(p.turns_ratio > 0.0) || !std::isfinite(p.turns_ratio))
    throw ValidationError("probe: turns ratio must be > 0");
  if (p.topology.empty()) throw ValidationError("probe: topology must not be empty");
}

AbcdNetwork probe_network(const ProbeModel& p, const FrequencyGrid& grid) {
  validate_probe(p);
  if (grid.empty()) throw ValidationError("probe_network: empty grid");

  const Eigen::Index n = grid.size();
  AbcdNetwork net = AbcdNetwork::identity(grid);
  for (ProbeModel::Stage stage : p.topology) {
    switch (stage) {
      case ProbeModel::Stage::shunt_cp: {
        Eigen::ArrayXcd y(n);
        for (Eigen::Index i = 0; i < n; ++i)
          y[i] = Complex(0.0, 2.0 * std::numbers::pi * grid[i] * p.parasitic_capacitance_f);
        net = cascade(net, make_shunt(grid, y));
        break;
      }
      case ProbeModel::Stage::series_llk: {
        Eigen::ArrayXcd z(n);
        for (Eigen::Index i = 0; i < n; ++i)
          z[i] = Complex(0.0, 2.0 * std::numbers::pi * grid[i] * p.leakage_inductance_h);
        net = cascade(net, make_series(grid, z));
        break;
      }
      case ProbeModel::Stage::transformer:
        net = cascade(net, make_transformer(grid, p.turns_ratio));
        break;
    }
  }
  return net;
}

void validate_bench(const BenchModel& b) {
  validate_probe(b.probe);
  if (b.grid.empty()) throw ValidationError("bench: empty sweep grid");
  if (b.lisn) validate_element(*b.lisn, "lisn");
  if (b.cable) validate_element(*b.cable, "cable");
  if (b.dut) {
    validate_element(*b.dut, "dut");
    if (b.dut->kind == LoopElement::Kind::transmission_line)
      throw ValidationError("dut: transmission line is not a one-port load");
  }
}

namespace {

// A loop branch enters the chain as a series impedance, except a root-level
// transmission line, which cascades as its own two-port. `split` halves a
// lumped impedance (or line length) so the cable can flank the loop.
AbcdNetwork loop_branch_network(const LoopElement& e, const FrequencyGrid& grid, bool split) {
  if (e.kind == LoopElement::Kind::transmission_line) {
    return make_transmission_line(grid, e.z0_ohm, split ? e.length_m / 2.0 : e.length_m,
                                  e.velocity_factor);
  }
  ComplexTrace z = eval_element_impedance(e, grid);
  if (!z.all_ok()) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z.status[static_cast<std::size_t>(i)] != PointStatus::ok) {
        throw ValidationError("loop element '" +
                              (e.label.empty() ? std::string(to_string(e.kind)) : e.label) +
                              "' is not evaluable at " + std::to_string(grid[i]) + " Hz");
      }
    }
  }
  return make_series(grid, split ? (z.values / 2.0).eval() : z.values);
}

}  // namespace

AbcdNetwork build_chain(const BenchModel& b) {
  validate_bench(b);
  AbcdNetwork net = probe_network(b.probe, b.grid);
  if (b.cable) net = cascade(net, loop_branch_network(*b.cable, b.grid, true));
  if (b.lisn) net = cascade(net, loop_branch_network(*b.lisn, b.grid, false));
  if (b.cable) net = cascade(net, loop_branch_network(*b.cable, b.grid, true));
  return net;
}

ComplexTrace synth_gamma(const BenchModel& b, const std::optional<LoopElement>& dut_override) {
  const std::optional<LoopElement>& dut = dut_override ? dut_override : b.dut;
  if (!dut) throw ValidationError("synth_gamma: bench has no DUT and no override was given");
  validate_element(*dut, "dut");
  if (dut->kind == LoopElement::Kind::transmission_line)
    throw ValidationError("dut: transmission line is not a one-port load");

  const AbcdNetwork chain = build_chain(b);
  const ComplexTrace z_dut = eval_element_impedance(*dut, b.grid);
  ComplexTrace gamma = reflection_from_impedance(input_impedance(chain, z_dut), b.z0);
  gamma.name = "gamma_m";
  apply_gamma_noise(gamma, b.noise, role_measurement);
  return gamma;
}

StandardsTriple synth_standards(const BenchModel& b, double r_load_ohm,
                                std::optional<double> finite_open_ohm) {
  if (!(r_load_ohm > 0.0)) throw ValidationError("synth_standards: load resistance must be > 0");
  if (finite_open_ohm && !(*finite_open_ohm > 0.0))
    throw ValidationError("synth_standards: finite open resistance must be > 0");

  const AbcdNetwork chain = build_chain(b);

  const ComplexTrace z_open = finite_open_ohm
                                  ? constant_trace(b.grid, Complex(*finite_open_ohm, 0.0))
                                  : open_load(b.grid);
  const ComplexTrace z_short = constant_trace(b.grid, Complex(0.0, 0.0));
  const ComplexTrace z_load = constant_trace(b.grid, Complex(r_load_ohm, 0.0));

  StandardsTriple s;
  s.gamma_open = reflection_from_impedance(input_impedance(chain, z_open), b.z0);
  s.gamma_short = reflection_from_impedance(input_impedance(chain, z_short), b.z0);
  s.gamma_load = reflection_from_impedance(input_impedance(chain, z_load), b.z0);
  s.gamma_open.name = "open";
  s.gamma_short.name = "short";
  s.gamma_load.name = "load";
  apply_gamma_noise(s.gamma_open, b.noise, role_open);
  apply_gamma_noise(s.gamma_short, b.noise, role_short);
  apply_gamma_noise(s.gamma_load, b.noise, role_load);
  return s;
}

namespace {

int scale_labeled_leaves(LoopElement& e, const std::string& label, double scale) {
  int hits = 0;
  if (e.label == label && !label.empty()) {
    switch (e.kind) {
      case LoopElement::Kind::resistor:
      case LoopElement::Kind::inductor:
      case LoopElement::Kind::capacitor:
        e.value *= scale;
        ++hits;
        break;
      default:
        throw ValidationError("mode_variants: element '" + label +
                              "' is not a scalable R/L/C leaf");
    }
  }
  for (LoopElement& child : e.children) hits += scale_labeled_leaves(child, label, scale);
  return hits;
}

}  // namespace

std::vector<LoopElement> mode_variants(
    const LoopElement& base_dut, const std::vector<std::pair<std::string, double>>& edits) {
  validate_element(base_dut, "dut");
  std::vector<LoopElement> variants;
  variants.reserve(edits.size() + 1);
  variants.push_back(base_dut);
  for (const auto& [label, scale] : edits) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw ValidationError("mode_variants: scale for '" + label + "' must be > 0");
    LoopElement variant = base_dut;
    if (scale_labeled_leaves(variant, label, scale) == 0)
      throw ValidationError("mode_variants: no element labeled '" + label + "'");
    variants.push_back(std::move(variant));
  }
  return variants;
}

}  // namespace zprobe
