#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "nlas/diagnostics.hpp"
#include "nlas/error.hpp"
#include "nlas/evolve.hpp"
#include "nlas/field.hpp"
#include "nlas/kernels.hpp"
#include "nlas/records.hpp"

namespace nlas {

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what) {}
};

/// 17 significant digits, locale independent.
inline std::string format_double(double v) {
  std::array<char, 40> buf;
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), r.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

inline bool parse_size(std::string_view s, std::size_t& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = line.find(sep, start);
    out.push_back(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Series: comma separated, one header line
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSeriesHeader = "t,x1,x2,ratio,log_ratio,grad_sup,support_D,ux_sup,holder_half";

inline void write_series(std::ostream& os, std::span<const DiagRecord> series) {
  os << kSeriesHeader << '\n';
  for (const DiagRecord& r : series) {
    const double cols[] = {r.t, r.x1, r.x2, r.ratio, r.log_ratio, r.grad_sup, r.support_D, r.ux_sup, r.holder_half};
    for (std::size_t i = 0; i < std::size(cols); ++i) os << (i ? "," : "") << format_double(cols[i]);
    os << '\n';
  }
}

inline std::string series_text(std::span<const DiagRecord> series) {
  std::ostringstream os;
  write_series(os, series);
  return os.str();
}

inline std::vector<DiagRecord> read_series(std::istream& is, const std::string& source = "series") {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line) || line != kSeriesHeader) throw FormatError(source, 1, "missing or unexpected header");
  std::vector<DiagRecord> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 9) throw FormatError(source, lineno, "expected 9 columns, got " + std::to_string(f.size()));
    double v[9];
    for (std::size_t i = 0; i < 9; ++i)
      if (!parse_double(f[i], v[i])) throw FormatError(source, lineno, "bad number '" + std::string(f[i]) + "'");
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots: header lines "key value", then "position value" per marker
// ---------------------------------------------------------------------------

inline void write_snapshot(std::ostream& os, const MarkerField& f, const VelocityLaw& law) {
  os << "nlas-snapshot 1\n";
  os << "t " << format_double(f.t) << '\n';
  os << "law " << law_name(law.kind) << '\n';
  os << "alpha " << format_double(law.alpha) << '\n';
  os << "a " << format_double(law.a) << '\n';
  os << "idx_x1 " << f.idx_x1 << '\n';
  os << "idx_x2 " << f.idx_x2 << '\n';
  os << "markers " << f.size() << '\n';
  for (std::size_t i = 0; i < f.size(); ++i)
    os << format_double(f.positions[i]) << ' ' << format_double(f.values[i]) << '\n';
}

inline MarkerField read_snapshot(std::istream& is, VelocityLaw* law_out = nullptr,
                                 const std::string& source = "snapshot") {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> std::string_view {
    if (!std::getline(is, line)) throw FormatError(source, lineno + 1, "unexpected end of file");
    ++lineno;
    return line;
  };
  auto keyed = [&](std::string_view key) {
    const std::string_view l = next();
    if (l.substr(0, key.size()) != key || l.size() <= key.size() || l[key.size()] != ' ')
      throw FormatError(source, lineno, "expected '" + std::string(key) + "'");
    return std::string(l.substr(key.size() + 1));
  };
  auto number = [&](std::string_view key) {
    const std::string s = keyed(key);
    double v;
    if (!parse_double(s, v)) throw FormatError(source, lineno, "bad number '" + s + "'");
    return v;
  };
  auto count = [&](std::string_view key) {
    const std::string s = keyed(key);
    std::size_t v;
    if (!parse_size(s, v)) throw FormatError(source, lineno, "bad count '" + s + "'");
    return v;
  };
  if (next() != "nlas-snapshot 1") throw FormatError(source, lineno, "not a snapshot file");
  MarkerField f;
  f.t = number("t");
  VelocityLaw law;
  try {
    law.kind = parse_law_kind(keyed("law"));
  } catch (const ConfigError& e) {
    throw FormatError(source, lineno, e.what());
  }
  law.alpha = number("alpha");
  law.a = number("a");
  f.idx_x1 = count("idx_x1");
  f.idx_x2 = count("idx_x2");
  const std::size_t n = count("markers");
  f.positions.resize(n);
  f.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string_view l = next();
    const auto parts = detail::split(l, ' ');
    if (parts.size() != 2 || !parse_double(parts[0], f.positions[i]) || !parse_double(parts[1], f.values[i]))
      throw FormatError(source, lineno, "expected 'position value'");
  }
  try {
    validate(f);
  } catch (const ContractViolation& e) {
    throw FormatError(source, lineno, e.what());
  }
  if (law_out) *law_out = law;
  return f;
}

// ---------------------------------------------------------------------------
// Report text: one inequality per line
// ---------------------------------------------------------------------------

inline void write_report(std::ostream& os, const Report& rep) {
  for (const Check& c : rep.checks) {
    os << rep.name << '.' << c.name << ' ' << format_double(c.t) << ' ' << format_double(c.value) << ' '
       << format_double(c.bound) << ' ' << format_double(c.margin) << ' '
       << (c.pass ? "pass" : (c.advisory ? "advisory-fail" : "fail")) << '\n';
  }
}

}  // namespace nlas
