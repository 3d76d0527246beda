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

#include "cryonoise/physics.hpp"

#include <cmath>
#include <string>

#include "cryonoise/error.hpp"
#include "cryonoise/sparams.hpp"

namespace cryonoise {
namespace {

using constants::boltzmann;
using constants::elementary_charge;

void check_frequency(Frequency f) {
  if (!(f.hz() > 0.0) || !std::isfinite(f.hz()))
    throw DomainError("frequency must be positive, got " + std::to_string(f.hz()) + " Hz");
}

void check_temperature(double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw DomainError("temperature must be non-negative, got " + std::to_string(t) + " K");
}

// x coth(x / scale), continuous at x = 0 (-> scale) and scale = 0 (-> |x|).
double x_coth(double x, double scale) {
  if (scale == 0.0) return std::abs(x);
  const double u = x / scale;
  if (std::abs(u) < 1e-4) return scale * (1.0 + u * u / 3.0);
  return x / std::tanh(u);
}

}  // namespace

double planck_occupation(Frequency f, double temperature_k) {
  check_frequency(f);
  check_temperature(temperature_k);
  if (temperature_k == 0.0) return 0.5;
  const double x = f.photon_energy() / (2.0 * boltzmann * temperature_k);
  return 0.5 / std::tanh(x);
}

double shot_occupation(Frequency f, double volts, double temperature_k) {
  check_frequency(f);
  check_temperature(temperature_k);
  const double hf = f.photon_energy();
  const double ev = elementary_charge * volts;
  const double scale = 2.0 * boltzmann * temperature_k;
  return (x_coth(ev + hf, scale) + x_coth(ev - hf, scale)) / (4.0 * hf);
}

double quantum_limit(double gain) {
  if (gain == 0.0 || !std::isfinite(gain)) throw DomainError("quantum_limit: gain must be nonzero");
  return std::abs((gain - 1.0) / (2.0 * gain));
}

double source_output_occupation(double s_pp_sq, double s_pq_sq, double n_source) {
  return (1.0 - s_pp_sq) * n_source + 0.5 * s_pq_sq;
}

double psd_from_occupation(double occupation, Frequency f, const ChainPoint& chain) {
  check_frequency(f);
  if (!(chain.gain > 0.0)) throw DomainError("readout gain must be positive");
  return chain.gain * (f.photon_energy() * occupation + boltzmann * chain.noise_temperature);
}

double occupation_from_psd(double psd, Frequency f, const ChainPoint& chain) {
  check_frequency(f);
  if (!(chain.gain > 0.0)) throw DomainError("readout gain must be positive");
  return (psd / chain.gain - boltzmann * chain.noise_temperature) / f.photon_energy();
}

std::vector<bool> source_qualification(const TwoPortSParams& sparams, int emitting_port,
                                       double threshold) {
  if (emitting_port != 1 && emitting_port != 2)
    throw DomainError("emitting port must be 1 or 2");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw DomainError("qualification threshold must lie in (0, 1)");
  std::vector<bool> pass;
  pass.reserve(sparams.size());
  for (const auto& s : sparams.data()) {
    const double pp = std::norm(emitting_port == 2 ? s.s22 : s.s11);
    const double pq = std::norm(emitting_port == 2 ? s.s21 : s.s12);
    const double headroom = 1.0 - pp;
    pass.push_back(headroom > 0.0 && pq <= threshold * headroom);
  }
  return pass;
}

double epsilon_from_temperature(Frequency signal, double temperature_k) {
  check_frequency(signal);
  check_temperature(temperature_k);
  return boltzmann * temperature_k / (constants::hbar * signal.angular());
}

double temperature_from_epsilon(Frequency signal, double epsilon) {
  check_frequency(signal);
  if (!(epsilon >= 0.0)) throw DomainError("thermal epsilon must be non-negative");
  return epsilon * constants::hbar * signal.angular() / boltzmann;
}

double epsilon_from_voltage(Frequency signal, double volts) {
  check_frequency(signal);
  return elementary_charge * volts / (2.0 * constants::hbar * signal.angular());
}

double voltage_from_epsilon(Frequency signal, double epsilon) {
  check_frequency(signal);
  return 2.0 * constants::hbar * signal.angular() * epsilon / elementary_charge;
}

double source_occupation(SourceKind kind, Frequency f, Frequency signal, double epsilon,
                         double bath_k) {
  if (kind == SourceKind::thermal)
    return planck_occupation(f, temperature_from_epsilon(signal, epsilon));
  return shot_occupation(f, voltage_from_epsilon(signal, epsilon), bath_k);
}

}  // namespace cryonoise
