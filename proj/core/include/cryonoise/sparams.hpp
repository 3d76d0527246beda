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

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "cryonoise/physics.hpp"

namespace cryonoise {

using Complex = std::complex<double>;

/// One 2x2 scattering matrix.
struct SMatrix {
  Complex s11{}, s12{}, s21{}, s22{};

  /// Largest singular value.
  double norm() const;
  bool operator==(const SMatrix&) const = default;
};

/// Frequency-indexed two-port scattering data. Immutable once built.
///
/// Invariant: frequencies strictly ascending and positive, one matrix per
/// frequency. The constructor throws DomainError otherwise.
class TwoPortSParams {
 public:
  TwoPortSParams() = default;
  TwoPortSParams(std::vector<Frequency> freqs, std::vector<SMatrix> data,
                 double reference_impedance = 50.0);

  std::size_t size() const { return freqs_.size(); }
  bool empty() const { return freqs_.empty(); }
  const std::vector<Frequency>& freqs() const { return freqs_; }
  const std::vector<SMatrix>& data() const { return data_; }
  const SMatrix& operator[](std::size_t i) const { return data_[i]; }
  double reference_impedance() const { return z0_; }

  /// Linear interpolation of real and imaginary parts. Throws RangeError
  /// outside [freqs.front(), freqs.back()].
  SMatrix at(Frequency f) const;
  TwoPortSParams resample(std::span<const Frequency> grid) const;

  bool is_passive(double tol = 1e-9) const;
  bool is_reciprocal(double tol = 1e-10) const;

 private:
  std::vector<Frequency> freqs_;
  std::vector<SMatrix> data_;
  double z0_ = 50.0;
};

/// Frequency-indexed reflection coefficient (a .s1p trace).
struct OnePortTrace {
  std::vector<Frequency> freqs;
  std::vector<Complex> gamma;
  double reference_impedance = 50.0;

  Complex at(Frequency f) const;
};

/// Matrix-level cascade through transfer (T) parameters. Throws
/// SingularError when either S21 vanishes.
SMatrix cascade(const SMatrix& a, const SMatrix& b);

/// Grid-level cascade. When the grids differ, `b` is resampled onto the
/// grid of `a`. SingularError messages name the offending frequency.
TwoPortSParams cascade(const TwoPortSParams& a, const TwoPortSParams& b);

/// Redheffer star product: the same connection as cascade() but computed
/// from signal-flow closure, so zero transmission is allowed.
SMatrix connect(const SMatrix& a, const SMatrix& b);

SMatrix ideal_thru_matrix();
TwoPortSParams ideal_thru(std::span<const Frequency> grid);

/// Matched attenuator: S11 = S22 = 0, S21 = S12 = 10^(-att_db / 20).
TwoPortSParams attenuator_model(double att_db, std::span<const Frequency> grid);

/// A two-port treated as a noise source; `emitting_port` is where the
/// calibrated noise leaves the component (2 in the usual labeling).
struct NoiseSourceModel {
  TwoPortSParams sparams;
  SourceKind emitter = SourceKind::thermal;
  int emitting_port = 2;
};

/// Matched, isolated source (S = 0) on the given grid.
NoiseSourceModel ideal_source(std::span<const Frequency> grid);

/// Non-ideal source output occupation at f, interpolating the source
/// S-parameters (RangeError outside their span).
double source_output_occupation(const NoiseSourceModel& src, double n_source, Frequency f);

}  // namespace cryonoise
