// Copyright 2026 The cryonoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cryonoise/touchstone.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"

namespace cryonoise {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Options {
  double scale = 1e9;
  DataFormat format = DataFormat::ma;
  double z0 = 50.0;
};

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::optional<double> to_number(std::string_view tok) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  // from_chars rejects a leading '+'.
  const char* begin = (!tok.empty() && tok.front() == '+') ? tok.data() + 1 : tok.data();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

Options parse_option_line(std::string_view line, std::size_t lineno) {
  Options opt;
  auto tokens = split_ws(line.substr(1));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string t = upper(tokens[i]);
    if (t == "HZ") opt.scale = 1.0;
    else if (t == "KHZ") opt.scale = 1e3;
    else if (t == "MHZ") opt.scale = 1e6;
    else if (t == "GHZ") opt.scale = 1e9;
    else if (t == "S") continue;
    else if (t == "Y" || t == "Z" || t == "H" || t == "G")
      throw ParseError("only S parameters are supported, option line declares " + t, lineno);
    else if (t == "RI") opt.format = DataFormat::ri;
    else if (t == "MA") opt.format = DataFormat::ma;
    else if (t == "DB") opt.format = DataFormat::db;
    else if (t == "R") {
      if (i + 1 >= tokens.size()) throw ParseError("option line: R without impedance", lineno);
      auto z = to_number(tokens[++i]);
      if (!z || !(*z > 0.0)) throw ParseError("option line: bad reference impedance", lineno);
      opt.z0 = *z;
    } else {
      throw ParseError("malformed option line: unknown token '" + std::string(tokens[i]) + "'",
                       lineno);
    }
  }
  return opt;
}

Complex decode(double a, double b, DataFormat fmt) {
  switch (fmt) {
    case DataFormat::ri: return {a, b};
    case DataFormat::ma: return std::polar(a, b * kDegToRad);
    case DataFormat::db: return std::polar(std::pow(10.0, a / 20.0), b * kDegToRad);
  }
  return {};
}

struct Parsed {
  double z0 = 50.0;
  std::vector<Frequency> freqs;
  std::vector<std::vector<Complex>> rows;
};

Parsed parse(std::string_view text, std::size_t ports) {
  const std::size_t columns = 1 + 2 * ports * ports;
  Parsed out;
  Options opt;
  bool have_options = false;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (auto bang = line.find('!'); bang != std::string_view::npos) line = line.substr(0, bang);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front())))
      line.remove_prefix(1);
    if (line.empty()) continue;
    if (line.front() == '[')
      throw ParseError("Touchstone v2 keyword '" + std::string(line) +
                           "' not supported; only Touchstone v1 files are accepted",
                       lineno);
    if (line.front() == '#') {
      if (!have_options) opt = parse_option_line(line, lineno);
      have_options = true;
      continue;
    }
    auto tokens = split_ws(line);
    if (tokens.size() != columns)
      throw ParseError("expected " + std::to_string(columns) + " columns for a " +
                           std::to_string(ports) + "-port file, found " +
                           std::to_string(tokens.size()),
                       lineno);
    std::vector<double> v;
    v.reserve(columns);
    for (auto tok : tokens) {
      auto x = to_number(tok);
      if (!x) throw ParseError("not a number: '" + std::string(tok) + "'", lineno);
      v.push_back(*x);
    }
    const Frequency f(v[0] * opt.scale);
    if (!(f.hz() > 0.0)) throw ParseError("frequency must be positive", lineno);
    if (!out.freqs.empty() && !(f > out.freqs.back()))
      throw ParseError("frequencies must be strictly ascending", lineno);
    out.freqs.push_back(f);
    std::vector<Complex> row;
    for (std::size_t k = 1; k < columns; k += 2) row.push_back(decode(v[k], v[k + 1], opt.format));
    out.rows.push_back(std::move(row));
  }
  out.z0 = opt.z0;
  return out;
}

const char* unit_name(FrequencyUnit u) {
  switch (u) {
    case FrequencyUnit::hz: return "HZ";
    case FrequencyUnit::khz: return "KHZ";
    case FrequencyUnit::mhz: return "MHZ";
    case FrequencyUnit::ghz: return "GHZ";
  }
  return "HZ";
}

double unit_scale(FrequencyUnit u) {
  switch (u) {
    case FrequencyUnit::hz: return 1.0;
    case FrequencyUnit::khz: return 1e3;
    case FrequencyUnit::mhz: return 1e6;
    case FrequencyUnit::ghz: return 1e9;
  }
  return 1.0;
}

const char* format_name(DataFormat f) {
  switch (f) {
    case DataFormat::ri: return "RI";
    case DataFormat::ma: return "MA";
    case DataFormat::db: return "DB";
  }
  return "RI";
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, " %.17g", v);
  out += buf;
}

void append_value(std::string& out, Complex z, DataFormat fmt) {
  switch (fmt) {
    case DataFormat::ri:
      append_number(out, z.real());
      append_number(out, z.imag());
      break;
    case DataFormat::ma:
      append_number(out, std::abs(z));
      append_number(out, std::arg(z) / kDegToRad);
      break;
    case DataFormat::db:
      append_number(out, 20.0 * std::log10(std::abs(z)));
      append_number(out, std::arg(z) / kDegToRad);
      break;
  }
}

std::string header(TouchstoneOptions opts, double z0) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# %s S %s R %.17g\n", unit_name(opts.unit),
                format_name(opts.format), z0);
  return buf;
}

void append_freq(std::string& out, Frequency f, TouchstoneOptions opts) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", f.hz() / unit_scale(opts.unit));
  out += buf;
}

}  // namespace

TwoPortSParams parse_touchstone(std::string_view text) {
  Parsed p = parse(text, 2);
  std::vector<SMatrix> data;
  data.reserve(p.rows.size());
  // v1 two-port order: S11 S21 S12 S22.
  for (const auto& r : p.rows) data.push_back({r[0], r[2], r[1], r[3]});
  return {std::move(p.freqs), std::move(data), p.z0};
}

OnePortTrace parse_touchstone_one_port(std::string_view text) {
  Parsed p = parse(text, 1);
  OnePortTrace out;
  out.freqs = std::move(p.freqs);
  out.reference_impedance = p.z0;
  for (const auto& r : p.rows) out.gamma.push_back(r[0]);
  return out;
}

std::string write_touchstone(const TwoPortSParams& s, TouchstoneOptions opts) {
  std::string out = "! two-port S-parameters\n" + header(opts, s.reference_impedance());
  for (std::size_t i = 0; i < s.size(); ++i) {
    append_freq(out, s.freqs()[i], opts);
    append_value(out, s[i].s11, opts.format);
    append_value(out, s[i].s21, opts.format);
    append_value(out, s[i].s12, opts.format);
    append_value(out, s[i].s22, opts.format);
    out += '\n';
  }
  return out;
}

std::string write_touchstone(const OnePortTrace& s, TouchstoneOptions opts) {
  std::string out = "! one-port reflection\n" + header(opts, s.reference_impedance);
  for (std::size_t i = 0; i < s.freqs.size(); ++i) {
    append_freq(out, s.freqs[i], opts);
    append_value(out, s.gamma[i], opts.format);
    out += '\n';
  }
  return out;
}

TwoPortSParams read_touchstone_file(const std::filesystem::path& path) {
  try {
    return parse_touchstone(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

OnePortTrace read_touchstone_one_port_file(const std::filesystem::path& path) {
  try {
    return parse_touchstone_one_port(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace cryonoise
