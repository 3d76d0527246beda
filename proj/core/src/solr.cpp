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

#include "cryonoise/solr.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"

namespace cryonoise {
namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double phase) { return std::remainder(phase, 2.0 * kPi); }

// Gaussian elimination with partial pivoting on a 3x3 complex system.
std::array<Complex, 3> solve3(std::array<std::array<Complex, 3>, 3> a, std::array<Complex, 3> b) {
  double scale = 0.0;
  for (const auto& row : a)
    for (const auto& v : row) scale = std::max(scale, std::abs(v));
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) <= 1e-12 * scale)
      throw SingularError("one-port calibration: degenerate standards (singular system)");
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const Complex f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<Complex, 3> x{};
  for (int r = 2; r >= 0; --r) {
    Complex s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

std::string hz_list(const std::vector<Frequency>& fs) {
  std::ostringstream os;
  os.precision(12);
  for (std::size_t i = 0; i < fs.size(); ++i) os << (i ? ", " : "") << fs[i].hz();
  return os.str();
}

}  // namespace

OnePortTerms solve_one_port(Complex short_m, Complex open_m, Complex load_m, Complex short_std,
                            Complex open_std, Complex load_std) {
  // Gamma_m = e00 + e11 Gamma Gamma_m - dE Gamma, with dE = e00 e11 - e10e01.
  const std::array<Complex, 3> gm{short_m, open_m, load_m};
  const std::array<Complex, 3> gs{short_std, open_std, load_std};
  std::array<std::array<Complex, 3>, 3> a{};
  for (int k = 0; k < 3; ++k) a[k] = {Complex(1.0, 0.0), gs[k] * gm[k], -gs[k]};
  const auto x = solve3(a, gm);
  return {x[0], x[1], x[0] * x[1] - x[2]};
}

std::vector<OnePortTerms> solve_one_port(const OnePortMeasurement& m,
                                         const OnePortStandards& standards) {
  const std::size_t n = m.freqs.size();
  if (m.short_m.size() != n || m.open_m.size() != n || m.load_m.size() != n)
    throw DomainError("one-port calibration: traces must share the frequency grid");
  std::vector<OnePortTerms> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Frequency f = m.freqs[i];
    try {
      out.push_back(solve_one_port(m.short_m[i], m.open_m[i], m.load_m[i],
                                   standards.short_std.at(f), standards.open_std.at(f),
                                   standards.load_std.at(f)));
    } catch (const SingularError& e) {
      std::ostringstream os;
      os.precision(12);
      os << e.what() << " at " << f.hz() << " Hz";
      throw SingularError(os.str());
    }
  }
  return out;
}

SMatrix embed(const SMatrix& dut, const ErrorTerms& e) {
  // Realize the boxes with e01 = 1; the product terms are all that matter.
  const Complex e10 = e.port1.reflection_tracking;
  const Complex e32 = e.transmission_fwd / e10;
  const SMatrix a{e.port1.directivity, Complex(1.0, 0.0), e10, e.port1.source_match};
  const SMatrix b{e.port2.source_match, e.transmission_rev, e32, e.port2.directivity};
  return connect(connect(a, dut), b);
}

TwoPortSParams embed(const TwoPortSParams& dut, const ErrorBoxes& eb) {
  if (dut.freqs() != eb.freqs) throw DomainError("embed: grid mismatch");
  std::vector<SMatrix> out;
  out.reserve(dut.size());
  for (std::size_t i = 0; i < dut.size(); ++i) out.push_back(embed(dut[i], eb.terms[i]));
  return {dut.freqs(), std::move(out), dut.reference_impedance()};
}

std::optional<SMatrix> deembed(const SMatrix& raw, const ErrorTerms& e) {
  const auto& p1 = e.port1;
  const auto& p2 = e.port2;
  if (p1.reflection_tracking == 0.0 || p2.reflection_tracking == 0.0 ||
      e.transmission_fwd == 0.0 || e.transmission_rev == 0.0)
    return std::nullopt;
  const Complex n11 = (raw.s11 - p1.directivity) / p1.reflection_tracking;
  const Complex n21 = raw.s21 / e.transmission_fwd;
  const Complex n12 = raw.s12 / e.transmission_rev;
  const Complex n22 = (raw.s22 - p2.directivity) / p2.reflection_tracking;
  const Complex e11 = p1.source_match;
  const Complex e22 = p2.source_match;
  const Complex d = (1.0 + n11 * e11) * (1.0 + n22 * e22) - n21 * n12 * e11 * e22;
  if (!(std::abs(d) > 1e-12)) return std::nullopt;
  return SMatrix{(n11 * (1.0 + n22 * e22) - e22 * n21 * n12) / d, n12 / d, n21 / d,
                 (n22 * (1.0 + n11 * e11) - e11 * n21 * n12) / d};
}

DeembedResult deembed(const TwoPortSParams& raw, const ErrorBoxes& eb) {
  if (raw.freqs() != eb.freqs) throw DomainError("deembed: error boxes not defined on raw grid");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const Complex bad(nan, nan);
  std::vector<SMatrix> out;
  std::vector<std::size_t> flagged;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (auto s = deembed(raw[i], eb.terms[i])) {
      out.push_back(*s);
    } else {
      out.push_back({bad, bad, bad, bad});
      flagged.push_back(i);
    }
  }
  return {TwoPortSParams(raw.freqs(), std::move(out), raw.reference_impedance()),
          std::move(flagged)};
}

ErrorBoxes solve_solr(std::span<const OnePortTerms> port1, std::span<const OnePortTerms> port2,
                      const TwoPortSParams& measured_reciprocal,
                      std::optional<std::vector<double>> phase_estimate) {
  const std::size_t n = measured_reciprocal.size();
  if (port1.size() != n || port2.size() != n)
    throw DomainError("SOLR: one-port solutions and reciprocal measurement differ in length");
  if (phase_estimate && phase_estimate->size() != n)
    throw DomainError("SOLR: phase estimate must have one value per frequency");

  ErrorBoxes eb;
  eb.freqs = measured_reciprocal.freqs();
  eb.terms.reserve(n);
  std::vector<Frequency> ambiguous;
  double reference = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SMatrix& m = measured_reciprocal[i];
    const Frequency f = eb.freqs[i];
    if (m.s21 == 0.0 || m.s12 == 0.0) {
      std::ostringstream os;
      os.precision(12);
      os << "SOLR: reciprocal standard shows no transmission at " << f.hz() << " Hz";
      throw SingularError(os.str());
    }
    const Complex r1 = port1[i].reflection_tracking;
    const Complex r2 = port2[i].reflection_tracking;
    // S21m / S12m = (e10e32 / e23e01) for a reciprocal standard, and
    // e10e32 e23e01 = e10e01 e23e32.
    const Complex root = std::sqrt(r1 * r2 * m.s21 / m.s12);
    if (phase_estimate) reference = (*phase_estimate)[i];

    ErrorTerms best;
    double best_dev = std::numeric_limits<double>::infinity();
    double best_phase = 0.0;
    for (const Complex t : {root, -root}) {
      ErrorTerms e{port1[i], port2[i], t, r1 * r2 / t};
      auto s = deembed(m, e);
      if (!s) continue;
      const double phase = std::arg(s->s21);
      const double dev = std::abs(wrap(phase - reference));
      if (dev < best_dev) {
        best_dev = dev;
        best = e;
        best_phase = phase;
      }
    }
    if (!std::isfinite(best_dev)) {
      std::ostringstream os;
      os.precision(12);
      os << "SOLR: singular correction at " << f.hz() << " Hz";
      throw SingularError(os.str());
    }
    if (!phase_estimate && best_dev > kPi / 4.0) ambiguous.push_back(f);
    if (!phase_estimate) reference = best_phase;
    eb.terms.push_back(best);
  }
  if (!ambiguous.empty())
    throw DiagnosticError(
        "SOLR: transmission root ambiguous (phase continuity lost) at Hz: " + hz_list(ambiguous) +
        "; supply a phase estimate for the reciprocal standard");
  return eb;
}

ErrorBoxes identity_error_boxes(std::span<const Frequency> grid) {
  return {std::vector<Frequency>(grid.begin(), grid.end()),
          std::vector<ErrorTerms>(grid.size(), ErrorTerms{})};
}

nlohmann::json to_json(const ErrorBoxes& eb) {
  nlohmann::json freqs = nlohmann::json::array();
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t i = 0; i < eb.freqs.size(); ++i) {
    const auto& t = eb.terms[i];
    freqs.push_back(eb.freqs[i].hz());
    terms.push_back({{"e00", complex_to_json(t.port1.directivity)},
                     {"e11", complex_to_json(t.port1.source_match)},
                     {"e10e01", complex_to_json(t.port1.reflection_tracking)},
                     {"e33", complex_to_json(t.port2.directivity)},
                     {"e22", complex_to_json(t.port2.source_match)},
                     {"e23e32", complex_to_json(t.port2.reflection_tracking)},
                     {"e10e32", complex_to_json(t.transmission_fwd)},
                     {"e23e01", complex_to_json(t.transmission_rev)}});
  }
  return {{"freq_hz", std::move(freqs)}, {"terms", std::move(terms)}};
}

ErrorBoxes error_boxes_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"freq_hz", "terms"}, "error boxes");
  const auto freqs = required<std::vector<double>>(j, "freq_hz", "error boxes");
  const auto terms = required<nlohmann::json>(j, "terms", "error boxes");
  if (!terms.is_array() || terms.size() != freqs.size())
    throw ConfigError("error boxes: 'terms' must have one entry per frequency");
  ErrorBoxes eb;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const auto& t = terms[i];
    reject_unknown_keys(t, {"e00", "e11", "e10e01", "e33", "e22", "e23e32", "e10e32", "e23e01"},
                        "error terms");
    eb.freqs.emplace_back(freqs[i]);
    auto c = [&t](const char* key) {
      return complex_from_json(required<nlohmann::json>(t, key, "error terms"));
    };
    eb.terms.push_back({{c("e00"), c("e11"), c("e10e01")},
                        {c("e33"), c("e22"), c("e23e32")},
                        c("e10e32"),
                        c("e23e01")});
  }
  return eb;
}

}  // namespace cryonoise
