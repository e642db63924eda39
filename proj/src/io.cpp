#include "zprobe/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <vector>

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

double phase_deg(Complex v) {
  if (v == Complex(0.0, 0.0)) return 0.0;
  return wrap_degrees(std::arg(v) * 180.0 / std::numbers::pi);
}

// Strict full-token double parse; from_chars does not take a leading '+'.
bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

Eigen::ArrayXcd to_complex_array(const std::vector<Complex>& v) {
  Eigen::ArrayXcd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

// Walks lines of `text`, invoking fn(line_number, line) with CR stripped.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    const std::string_view raw = pos == std::string_view::npos
                                     ? text.substr(start)
                                     : text.substr(start, pos - start);
    ++line_no;
    if (!(pos == std::string_view::npos && raw.empty())) fn(line_no, strip_cr(raw));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Touchstone

TouchstoneFormat touchstone_format_from_string(const std::string& name) {
  const std::string up = to_upper(name);
  if (up == "RI") return TouchstoneFormat::ri;
  if (up == "MA") return TouchstoneFormat::ma;
  if (up == "DB") return TouchstoneFormat::db;
  throw ValidationError("unknown Touchstone format '" + name + "'");
}

const char* to_string(TouchstoneFormat f) {
  switch (f) {
    case TouchstoneFormat::ri: return "RI";
    case TouchstoneFormat::ma: return "MA";
    case TouchstoneFormat::db: return "DB";
  }
  return "RI";
}

TouchstoneDocument parse_touchstone_1port(std::string_view text) {
  TouchstoneDocument doc;
  bool have_option_line = false;
  double unit_scale = 1.0;
  double last_freq = 0.0;

  std::vector<double> freqs;
  std::vector<Complex> values;
  std::vector<std::string> comments;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    // Inline comments are allowed after data; keep the text.
    if (const std::size_t bang = line.find('!'); bang != std::string_view::npos) {
      std::string_view comment = line.substr(bang + 1);
      if (!comment.empty() && comment.front() == ' ') comment.remove_prefix(1);
      if (!comment.empty()) comments.emplace_back(comment);
      line = line.substr(0, bang);
    }

    const auto fields = split_whitespace(line);
    if (fields.empty()) return;

    if (fields[0].front() == '#') {
      if (have_option_line)
        throw ParseError(line_no, "duplicate option line");
      have_option_line = true;

      // "# [unit] [S] [RI|MA|DB] [R n]"; omitted fields take the v1 defaults.
      doc.frequency_unit = "GHz";
      unit_scale = 1e9;
      bool expect_resistance = false;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        std::string_view tok = fields[i];
        if (i == 0) {
          tok.remove_prefix(1);  // '#'
          if (tok.empty()) continue;
        }
        if (expect_resistance) {
          double r = 0.0;
          if (!parse_double(tok, r) || !(r > 0.0))
            throw ParseError(line_no, "invalid reference resistance '" + std::string(tok) + "'");
          doc.reference_ohm = r;
          expect_resistance = false;
          continue;
        }
        const std::string up = to_upper(tok);
        if (up == "HZ") {
          doc.frequency_unit = "Hz";
          unit_scale = 1.0;
        } else if (up == "KHZ") {
          doc.frequency_unit = "kHz";
          unit_scale = 1e3;
        } else if (up == "MHZ") {
          doc.frequency_unit = "MHz";
          unit_scale = 1e6;
        } else if (up == "GHZ") {
          doc.frequency_unit = "GHz";
          unit_scale = 1e9;
        } else if (up == "S") {
          // parameter type; only S-parameter data is meaningful here
        } else if (up == "Y" || up == "Z" || up == "G" || up == "H") {
          throw ParseError(line_no, "unsupported parameter type '" + std::string(tok) +
                                        "' (only S is supported)");
        } else if (up == "RI" || up == "MA" || up == "DB") {
          doc.format = touchstone_format_from_string(up);
        } else if (up == "R") {
          expect_resistance = true;
        } else {
          throw ParseError(line_no, "unknown option token '" + std::string(tok) + "'");
        }
      }
      if (expect_resistance) throw ParseError(line_no, "option 'R' without a resistance value");
      return;
    }

    if (!have_option_line)
      throw ParseError(line_no, "data row precedes the option line");

    if (fields.size() != 3)
      throw ParseError(line_no, "expected 3 numeric fields, got " +
                                    std::to_string(fields.size()));
    double raw[3];
    for (int k = 0; k < 3; ++k) {
      if (!parse_double(fields[static_cast<std::size_t>(k)], raw[k]))
        throw ParseError(line_no, "invalid numeric field '" +
                                      std::string(fields[static_cast<std::size_t>(k)]) + "'");
    }

    const double f_hz = raw[0] * unit_scale;
    if (!(f_hz > 0.0)) throw ParseError(line_no, "frequency must be positive");
    if (!freqs.empty() && !(f_hz > last_freq))
      throw ParseError(line_no, "non-monotonic frequency");
    last_freq = f_hz;
    freqs.push_back(f_hz);

    switch (doc.format) {
      case TouchstoneFormat::ri:
        values.emplace_back(raw[1], raw[2]);
        break;
      case TouchstoneFormat::ma: {
        const double ang = raw[2] * std::numbers::pi / 180.0;
        values.emplace_back(raw[1] * std::cos(ang), raw[1] * std::sin(ang));
        break;
      }
      case TouchstoneFormat::db: {
        const double mag = std::pow(10.0, raw[1] / 20.0);
        const double ang = raw[2] * std::numbers::pi / 180.0;
        values.emplace_back(mag * std::cos(ang), mag * std::sin(ang));
        break;
      }
    }
  });

  if (!have_option_line) throw ParseError(1, "missing option line");

  doc.trace = ComplexTrace(FrequencyGrid(to_array(freqs)), to_complex_array(values));
  doc.trace.comments = std::move(comments);
  return doc;
}

std::string write_touchstone_1port(const ComplexTrace& trace, TouchstoneFormat format,
                                   double reference_ohm) {
  if (!(reference_ohm > 0.0))
    throw ValidationError("write_touchstone_1port: reference resistance must be > 0");
  std::string out;
  for (const std::string& c : trace.comments) out += "! " + c + "\n";
  out += "# Hz S ";
  out += to_string(format);
  out += " R " + fmt_g(reference_ohm) + "\n";

  for (Eigen::Index i = 0; i < trace.size(); ++i) {
    const Complex v = trace.values[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw ValidationError("write_touchstone_1port: non-finite value at point " +
                            std::to_string(i));
    out += fmt_g(trace.grid[i]);
    switch (format) {
      case TouchstoneFormat::ri:
        out += " " + fmt_g(v.real()) + " " + fmt_g(v.imag());
        break;
      case TouchstoneFormat::ma:
        out += " " + fmt_g(std::abs(v)) + " " + fmt_g(phase_deg(v));
        break;
      case TouchstoneFormat::db: {
        const double mag = std::abs(v);
        if (mag == 0.0)
          throw ValidationError(
              "write_touchstone_1port: zero magnitude is not representable in DB format");
        out += " " + fmt_g(20.0 * std::log10(mag)) + " " + fmt_g(phase_deg(v));
        break;
      }
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kTraceCsvHeader = "freq_hz,re,im";
constexpr const char* kImpedanceCsvHeader =
    "freq_hz,z_re_ohm,z_im_ohm,z_mag_ohm,z_phase_deg,status";

}  // namespace

std::string write_trace_csv(const ComplexTrace& trace) {
  std::string out = std::string(kTraceCsvHeader) + "\n";
  for (Eigen::Index i = 0; i < trace.size(); ++i) {
    out += fmt_g(trace.grid[i]) + "," + fmt_g(trace.values[i].real()) + "," +
           fmt_g(trace.values[i].imag()) + "\n";
  }
  return out;
}

ComplexTrace parse_trace_csv(std::string_view text) {
  std::vector<double> freqs;
  std::vector<Complex> values;
  bool have_header = false;
  double last_freq = 0.0;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    if (line.front() == '#') return;  // metadata comments
    if (!have_header) {
      if (line != kTraceCsvHeader)
        throw ParseError(line_no, "expected header '" + std::string(kTraceCsvHeader) + "'");
      have_header = true;
      return;
    }
    const auto fields = split_fields(line, ',');
    if (fields.size() != 3)
      throw ParseError(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
    double raw[3];
    for (int k = 0; k < 3; ++k) {
      if (!parse_double(fields[static_cast<std::size_t>(k)], raw[k]))
        throw ParseError(line_no, "invalid numeric field '" +
                                      std::string(fields[static_cast<std::size_t>(k)]) + "'");
    }
    if (!(raw[0] > 0.0)) throw ParseError(line_no, "frequency must be positive");
    if (!freqs.empty() && !(raw[0] > last_freq))
      throw ParseError(line_no, "non-monotonic frequency");
    last_freq = raw[0];
    freqs.push_back(raw[0]);
    values.emplace_back(raw[1], raw[2]);
  });

  if (!have_header) throw ParseError(1, "missing header row");

  return ComplexTrace(FrequencyGrid(to_array(freqs)), to_complex_array(values));
}

std::string write_impedance_csv(const ImpedanceTrace& trace) {
  std::string out;
  if (!trace.cal_id.empty()) out += "# calibration " + trace.cal_id + "\n";
  if (!trace.source_id.empty()) out += "# source " + trace.source_id + "\n";
  if (trace.resampled) out += "# resampled\n";
  out += std::string(kImpedanceCsvHeader) + "\n";
  for (Eigen::Index i = 0; i < trace.size(); ++i) {
    const Complex z = trace.z[i];
    out += fmt_g(trace.grid[i]) + "," + fmt_g(z.real()) + "," + fmt_g(z.imag()) + "," +
           fmt_g(std::abs(z)) + "," + fmt_g(phase_deg(z)) + "," +
           to_string(trace.status[static_cast<std::size_t>(i)]) + "\n";
  }
  return out;
}

ImpedanceTrace parse_impedance_csv(std::string_view text) {
  std::vector<double> freqs;
  std::vector<Complex> values;
  std::vector<PointStatus> status;
  ImpedanceTrace out;
  bool have_header = false;
  double last_freq = 0.0;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    if (line.front() == '#') {
      std::string_view body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body == "resampled") {
        out.resampled = true;
      } else if (body.starts_with("calibration ")) {
        out.cal_id = std::string(body.substr(12));
      } else if (body.starts_with("source ")) {
        out.source_id = std::string(body.substr(7));
      }
      return;
    }
    if (!have_header) {
      if (line != kImpedanceCsvHeader)
        throw ParseError(line_no,
                         "expected header '" + std::string(kImpedanceCsvHeader) + "'");
      have_header = true;
      return;
    }
    const auto fields = split_fields(line, ',');
    if (fields.size() != 6)
      throw ParseError(line_no, "expected 6 fields, got " + std::to_string(fields.size()));
    double raw[5];
    for (int k = 0; k < 5; ++k) {
      if (!parse_double(fields[static_cast<std::size_t>(k)], raw[k]))
        throw ParseError(line_no, "invalid numeric field '" +
                                      std::string(fields[static_cast<std::size_t>(k)]) + "'");
    }
    if (!(raw[0] > 0.0)) throw ParseError(line_no, "frequency must be positive");
    if (!freqs.empty() && !(raw[0] > last_freq))
      throw ParseError(line_no, "non-monotonic frequency");
    last_freq = raw[0];
    PointStatus s;
    try {
      s = point_status_from_string(std::string(fields[5]));
    } catch (const ValidationError&) {
      throw ParseError(line_no, "unknown status '" + std::string(fields[5]) + "'");
    }
    freqs.push_back(raw[0]);
    values.emplace_back(raw[1], raw[2]);
    status.push_back(s);
  });

  if (!have_header) throw ParseError(1, "missing header row");

  out.grid = FrequencyGrid(to_array(freqs));
  out.z = to_complex_array(values);
  out.status = std::move(status);
  return out;
}

// ---------------------------------------------------------------------------
// Resampling

ComplexTrace resample(const ComplexTrace& trace, const FrequencyGrid& target) {
  if (trace.grid.empty()) throw ValidationError("resample: source trace is empty");
  if (target.empty()) throw ValidationError("resample: target grid is empty");

  const double span_lo = trace.grid.front() * (1.0 - 1e-12);
  const double span_hi = trace.grid.back() * (1.0 + 1e-12);
  if (target.front() < span_lo || target.back() > span_hi) {
    throw ValidationError("resample: target grid [" + fmt_g(target.front()) + ", " +
                          fmt_g(target.back()) + "] Hz extends outside the source span [" +
                          fmt_g(trace.grid.front()) + ", " + fmt_g(trace.grid.back()) + "] Hz");
  }

  const Eigen::Index n = target.size();
  Eigen::ArrayXcd values(n);
  std::vector<PointStatus> status(static_cast<std::size_t>(n), PointStatus::ok);
  const Eigen::ArrayXd& src = trace.grid.points_hz();

  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = target[i];
    // Upper neighbour index; clamp so j-1 and j always bracket f.
    Eigen::Index j = std::upper_bound(src.data(), src.data() + src.size(), f) - src.data();
    if (j <= 0) j = 1;
    if (j >= src.size()) j = src.size() - 1;

    const double f_lo = src[j - 1];
    const double f_hi = src[j];
    double w = std::log(f / f_lo) / std::log(f_hi / f_lo);
    w = std::clamp(w, 0.0, 1.0);
    values[i] = (1.0 - w) * trace.values[j - 1] + w * trace.values[j];

    const PointStatus lo_status = trace.status[static_cast<std::size_t>(j - 1)];
    const PointStatus hi_status = trace.status[static_cast<std::size_t>(j)];
    if (w == 0.0) {
      status[static_cast<std::size_t>(i)] = lo_status;
    } else if (w == 1.0) {
      status[static_cast<std::size_t>(i)] = hi_status;
    } else if (lo_status != PointStatus::ok) {
      status[static_cast<std::size_t>(i)] = lo_status;
    } else {
      status[static_cast<std::size_t>(i)] = hi_status;
    }
  }

  ComplexTrace out(target, std::move(values), std::move(status));
  out.name = trace.name;
  out.comments = trace.comments;
  out.resampled = true;
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return content;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename temporary file onto '" + path.string() + "'");
  }
}

}  // namespace zprobe
