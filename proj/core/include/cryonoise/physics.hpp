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

// Photon-flux noise laws. Every occupation below is a photon number per
// unit time per unit bandwidth; multiply by h*f to obtain a PSD in W/Hz.
// Frequencies cross the API in Hz; angular frequency is internal.

#include <compare>
#include <vector>

#include "cryonoise/constants.hpp"

namespace cryonoise {

class TwoPortSParams;

/// Ordinary frequency in Hz. Construction does not validate; the laws that
/// need f > 0 check it and throw DomainError.
class Frequency {
 public:
  constexpr Frequency() = default;
  constexpr explicit Frequency(double hz) : hz_(hz) {}

  constexpr double hz() const { return hz_; }
  constexpr double angular() const { return 2.0 * std::numbers::pi * hz_; }
  /// Photon energy h*f in joules.
  constexpr double photon_energy() const { return constants::planck_h * hz_; }

  constexpr auto operator<=>(const Frequency&) const = default;

 private:
  double hz_ = 0.0;
};

inline constexpr Frequency operator""_GHz(long double v) {
  return Frequency(static_cast<double>(v) * 1e9);
}
inline constexpr Frequency operator""_GHz(unsigned long long v) {
  return Frequency(static_cast<double>(v) * 1e9);
}

enum class SourceKind { thermal, shot };

/// Dimensionless drive of a calibrated source: k_B T / (hbar w_s) for a
/// thermal source, e V / (2 hbar w_s) for a shot-noise junction.
struct ControlParameter {
  double epsilon = 0.0;
  SourceKind kind = SourceKind::thermal;
};

/// Gain and noise temperature of a linear readout chain at one frequency.
struct ChainPoint {
  double gain = 1.0;               // linear power gain G_sys
  double noise_temperature = 0.0;  // T_sys in K
};

double planck_occupation(Frequency f, double temperature_k);

/// Symmetrized tunnel-junction emission
///   (1 / 4hf) sum_{+-} (eV +- hf) coth((eV +- hf) / 2 k_B T).
/// Equals planck_occupation at V = 0 and tends to e|V| / 2hf at large bias.
double shot_occupation(Frequency f, double volts, double temperature_k);

/// |(G - 1) / 2G|, the minimum added noise of a phase-preserving amplifier.
double quantum_limit(double gain);

/// Output occupation of a two-port source emitting from port p, with vacuum
/// entering the other port:  (1 - |S_pp|^2) N_source + |S_pq|^2 / 2.
double source_output_occupation(double s_pp_sq, double s_pq_sq, double n_source);

double psd_from_occupation(double occupation, Frequency f, const ChainPoint& chain);
double occupation_from_psd(double psd, Frequency f, const ChainPoint& chain);

/// Per-frequency check |S_pq|^2 <= threshold (1 - |S_pp|^2) for a source
/// emitting from `emitting_port` (1 or 2).
std::vector<bool> source_qualification(const TwoPortSParams& sparams, int emitting_port,
                                       double threshold = 0.1);

// Control-parameter conversions, referenced to the signal frequency.
double epsilon_from_temperature(Frequency signal, double temperature_k);
double temperature_from_epsilon(Frequency signal, double epsilon);
double epsilon_from_voltage(Frequency signal, double volts);
double voltage_from_epsilon(Frequency signal, double epsilon);

/// N_source(f, eps) for either source kind. `signal` fixes the epsilon
/// scale; `bath_k` is the junction temperature (shot kind only).
double source_occupation(SourceKind kind, Frequency f, Frequency signal, double epsilon,
                         double bath_k = 0.0);

}  // namespace cryonoise
