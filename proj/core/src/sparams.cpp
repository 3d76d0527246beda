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

#include "cryonoise/sparams.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cryonoise/error.hpp"

namespace cryonoise {
namespace {

std::string hz_string(Frequency f) {
  std::ostringstream os;
  os.precision(12);
  os << f.hz() << " Hz";
  return os.str();
}

SMatrix lerp(const SMatrix& a, const SMatrix& b, double t) {
  auto mix = [t](Complex x, Complex y) { return x + (y - x) * t; };
  return {mix(a.s11, b.s11), mix(a.s12, b.s12), mix(a.s21, b.s21), mix(a.s22, b.s22)};
}

// Locates f in an ascending grid: returns (lower index, fraction).
std::pair<std::size_t, double> bracket(const std::vector<Frequency>& grid, Frequency f) {
  if (grid.empty()) throw RangeError("interpolation on an empty grid");
  if (f < grid.front() || f > grid.back())
    throw RangeError("frequency " + hz_string(f) + " outside data span [" +
                     hz_string(grid.front()) + ", " + hz_string(grid.back()) + "]");
  auto it = std::lower_bound(grid.begin(), grid.end(), f);
  const auto hi = static_cast<std::size_t>(it - grid.begin());
  if (grid[hi] == f) return {hi, 0.0};
  const std::size_t lo = hi - 1;
  return {lo, (f.hz() - grid[lo].hz()) / (grid[hi].hz() - grid[lo].hz())};
}

struct TMatrix {
  Complex t11, t12, t21, t22;
};

TMatrix to_t(const SMatrix& s) {
  const Complex det = s.s11 * s.s22 - s.s12 * s.s21;
  return {-det / s.s21, s.s11 / s.s21, -s.s22 / s.s21, 1.0 / s.s21};
}

SMatrix to_s(const TMatrix& t) {
  const Complex det = t.t11 * t.t22 - t.t12 * t.t21;
  return {t.t12 / t.t22, det / t.t22, 1.0 / t.t22, -t.t21 / t.t22};
}

TMatrix operator*(const TMatrix& a, const TMatrix& b) {
  return {a.t11 * b.t11 + a.t12 * b.t21, a.t11 * b.t12 + a.t12 * b.t22,
          a.t21 * b.t11 + a.t22 * b.t21, a.t21 * b.t12 + a.t22 * b.t22};
}

}  // namespace

double SMatrix::norm() const {
  // Largest eigenvalue of S^H S.
  const double a = std::norm(s11) + std::norm(s21);
  const double d = std::norm(s12) + std::norm(s22);
  const Complex b = std::conj(s11) * s12 + std::conj(s21) * s22;
  const double half = 0.5 * (a - d);
  return std::sqrt(0.5 * (a + d) + std::sqrt(half * half + std::norm(b)));
}

TwoPortSParams::TwoPortSParams(std::vector<Frequency> freqs, std::vector<SMatrix> data,
                               double reference_impedance)
    : freqs_(std::move(freqs)), data_(std::move(data)), z0_(reference_impedance) {
  if (freqs_.size() != data_.size())
    throw DomainError("S-parameter grid has " + std::to_string(freqs_.size()) +
                      " frequencies but " + std::to_string(data_.size()) + " matrices");
  for (std::size_t i = 0; i < freqs_.size(); ++i) {
    if (!(freqs_[i].hz() > 0.0)) throw DomainError("S-parameter frequencies must be positive");
    if (i > 0 && !(freqs_[i] > freqs_[i - 1]))
      throw DomainError("S-parameter frequencies must be strictly ascending at " +
                        hz_string(freqs_[i]));
  }
  if (!(z0_ > 0.0)) throw DomainError("reference impedance must be positive");
}

SMatrix TwoPortSParams::at(Frequency f) const {
  const auto [i, t] = bracket(freqs_, f);
  return t == 0.0 ? data_[i] : lerp(data_[i], data_[i + 1], t);
}

TwoPortSParams TwoPortSParams::resample(std::span<const Frequency> grid) const {
  std::vector<SMatrix> out;
  out.reserve(grid.size());
  for (Frequency f : grid) out.push_back(at(f));
  return {std::vector<Frequency>(grid.begin(), grid.end()), std::move(out), z0_};
}

bool TwoPortSParams::is_passive(double tol) const {
  return std::all_of(data_.begin(), data_.end(),
                     [tol](const SMatrix& s) { return s.norm() <= 1.0 + tol; });
}

bool TwoPortSParams::is_reciprocal(double tol) const {
  return std::all_of(data_.begin(), data_.end(),
                     [tol](const SMatrix& s) { return std::abs(s.s21 - s.s12) <= tol; });
}

Complex OnePortTrace::at(Frequency f) const {
  if (freqs.size() != gamma.size()) throw DomainError("one-port trace size mismatch");
  const auto [i, t] = bracket(freqs, f);
  return t == 0.0 ? gamma[i] : gamma[i] + (gamma[i + 1] - gamma[i]) * t;
}

SMatrix cascade(const SMatrix& a, const SMatrix& b) {
  if (a.s21 == 0.0 || b.s21 == 0.0) throw SingularError("cascade: S21 = 0");
  return to_s(to_t(a) * to_t(b));
}

TwoPortSParams cascade(const TwoPortSParams& a, const TwoPortSParams& b) {
  const TwoPortSParams bb = (a.freqs() == b.freqs()) ? b : b.resample(a.freqs());
  std::vector<SMatrix> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].s21 == 0.0 || bb[i].s21 == 0.0)
      throw SingularError("cascade: S21 = 0 at " + hz_string(a.freqs()[i]));
    out.push_back(cascade(a[i], bb[i]));
  }
  return {a.freqs(), std::move(out), a.reference_impedance()};
}

SMatrix connect(const SMatrix& a, const SMatrix& b) {
  const Complex loop = 1.0 - a.s22 * b.s11;
  if (loop == 0.0) throw SingularError("connect: unstable loop (S22a S11b = 1)");
  return {a.s11 + a.s12 * a.s21 * b.s11 / loop, a.s12 * b.s12 / loop, a.s21 * b.s21 / loop,
          b.s22 + b.s21 * b.s12 * a.s22 / loop};
}

SMatrix ideal_thru_matrix() { return {0.0, 1.0, 1.0, 0.0}; }

TwoPortSParams ideal_thru(std::span<const Frequency> grid) { return attenuator_model(0.0, grid); }

TwoPortSParams attenuator_model(double att_db, std::span<const Frequency> grid) {
  if (!(att_db >= 0.0)) throw DomainError("attenuation must be non-negative");
  const double t = std::pow(10.0, -att_db / 20.0);
  return {std::vector<Frequency>(grid.begin(), grid.end()),
          std::vector<SMatrix>(grid.size(), SMatrix{0.0, t, t, 0.0})};
}

NoiseSourceModel ideal_source(std::span<const Frequency> grid) {
  return {TwoPortSParams(std::vector<Frequency>(grid.begin(), grid.end()),
                         std::vector<SMatrix>(grid.size(), SMatrix{})),
          SourceKind::thermal, 2};
}

double source_output_occupation(const NoiseSourceModel& src, double n_source, Frequency f) {
  const SMatrix s = src.sparams.at(f);
  const bool p2 = src.emitting_port == 2;
  return source_output_occupation(std::norm(p2 ? s.s22 : s.s11), std::norm(p2 ? s.s21 : s.s12),
                                  n_source);
}

}  // namespace cryonoise
