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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryonoise/physics.hpp"

namespace cryonoise {

/// One attenuation stage of an input line, thermalized at `temperature`.
struct ThermalStage {
  std::string name;
  double temperature = 0.0;      // K
  double lumped_db = 0.0;        // attenuators
  double length_m = 0.0;
  double alpha_db_per_m = 0.0;   // cable loss, used when no table is given
  /// Optional (freq_hz, dB/m) table, linearly interpolated and clamped.
  std::vector<std::pair<double, double>> alpha_table;

  double cable_loss_db_per_m(Frequency f) const;
  double total_db(Frequency f) const;
  /// Linear power transmission 10^(-A_tot / 10).
  double transmission(Frequency f) const;
};

/// Input line from room temperature inward.
struct ChainSpec {
  double source_temperature = 295.0;  // T0, K
  std::vector<ThermalStage> stages;

  void validate() const;
};

/// Occupation leaving each stage:
///   N_i = A_i N_{i-1} + (1 - A_i) N_therm(f, T_i),  N_0 = N_therm(f, T0).
/// Element i is the output of stages[i].
std::vector<double> cascade_occupation(const ChainSpec& spec, Frequency f);

/// CSV with columns stage,T_K,A_lump_dB,length_m,alpha_dB_per_m,A_tot_dB,N_photons.
std::string stage_table_report(const ChainSpec& spec, Frequency f);

/// The seven-stage dilution-refrigerator input line used as a reference
/// (295 K room temperature down to a 70 mK cold finger).
ChainSpec reference_input_line();

ChainSpec chain_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChainSpec& spec);

/// Readout chain parameters on a frequency grid with optional 1-sigma
/// uncertainties (empty vectors when unknown).
struct ReadoutChainParams {
  std::vector<Frequency> freqs;
  std::vector<double> gain;
  std::vector<double> noise_temperature;
  std::vector<double> sigma_gain;
  std::vector<double> sigma_noise_temperature;

  std::size_t size() const { return freqs.size(); }
  ChainPoint point(std::size_t i) const { return {gain.at(i), noise_temperature.at(i)}; }
  void validate() const;
};

/// PSD at the chain input plane for occupation `n_at_plane`; i is the grid index.
double chain_forward_psd(const ReadoutChainParams& chain, std::size_t i, double n_at_plane);

}  // namespace cryonoise
