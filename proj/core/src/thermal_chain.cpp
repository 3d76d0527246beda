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

#include "cryonoise/thermal_chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"

namespace cryonoise {

double ThermalStage::cable_loss_db_per_m(Frequency f) const {
  if (alpha_table.empty()) return alpha_db_per_m;
  if (f.hz() <= alpha_table.front().first) return alpha_table.front().second;
  if (f.hz() >= alpha_table.back().first) return alpha_table.back().second;
  auto hi = std::upper_bound(alpha_table.begin(), alpha_table.end(), f.hz(),
                             [](double x, const auto& p) { return x < p.first; });
  auto lo = hi - 1;
  const double t = (f.hz() - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

double ThermalStage::total_db(Frequency f) const {
  return lumped_db + cable_loss_db_per_m(f) * length_m;
}

double ThermalStage::transmission(Frequency f) const { return std::pow(10.0, -total_db(f) / 10.0); }

void ChainSpec::validate() const {
  if (!(source_temperature >= 0.0)) throw DomainError("chain: source temperature must be >= 0");
  for (const auto& s : stages) {
    if (!(s.temperature >= 0.0))
      throw DomainError("chain stage '" + s.name + "': temperature must be >= 0");
    if (!(s.lumped_db >= 0.0) || !(s.length_m >= 0.0) || !(s.alpha_db_per_m >= 0.0))
      throw DomainError("chain stage '" + s.name + "': attenuations and length must be >= 0");
    for (std::size_t i = 0; i < s.alpha_table.size(); ++i) {
      if (!(s.alpha_table[i].second >= 0.0))
        throw DomainError("chain stage '" + s.name + "': alpha table values must be >= 0");
      if (i > 0 && !(s.alpha_table[i].first > s.alpha_table[i - 1].first))
        throw DomainError("chain stage '" + s.name + "': alpha table must be ascending");
    }
  }
}

std::vector<double> cascade_occupation(const ChainSpec& spec, Frequency f) {
  spec.validate();
  std::vector<double> out;
  out.reserve(spec.stages.size());
  double n = planck_occupation(f, spec.source_temperature);
  for (const auto& s : spec.stages) {
    const double a = s.transmission(f);
    n = a * n + (1.0 - a) * planck_occupation(f, s.temperature);
    out.push_back(n);
  }
  return out;
}

std::string stage_table_report(const ChainSpec& spec, Frequency f) {
  std::string out = "stage,T_K,A_lump_dB,length_m,alpha_dB_per_m,A_tot_dB,N_photons\n";
  const auto n = cascade_occupation(spec, f);
  char buf[256];
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& s = spec.stages[i];
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", s.temperature,
                  s.lumped_db, s.length_m, s.cable_loss_db_per_m(f), s.total_db(f), n[i]);
    out += s.name;
    out += buf;
  }
  return out;
}

ChainSpec reference_input_line() {
  ChainSpec spec;
  spec.source_temperature = 295.0;
  spec.stages = {
      {"RT", 295.0, 15.0, 5.0, 0.85, {}},
      {"50 K", 50.0, 0.0, 0.25, 18.98, {}},
      {"3 K", 2.55, 10.0, 0.15, 18.98, {}},
      {"Still", 0.82, 10.0, 0.10, 18.98, {}},
      {"CP", 0.13, 10.0, 0.10, 18.98, {}},
      {"MXC", 0.02, 0.0, 0.15, 18.98, {}},
      {"Cold Finger", 0.07, 10.0, 0.0, 0.0, {}},  // no cable: lumped only
  };
  return spec;
}

ChainSpec chain_spec_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"source_temperature_K", "stages"}, "chain");
  ChainSpec spec;
  spec.source_temperature = required<double>(j, "source_temperature_K", "chain");
  const auto it = j.find("stages");
  if (it == j.end() || !it->is_array()) throw ConfigError("chain: 'stages' must be an array");
  for (const auto& s : *it) {
    reject_unknown_keys(s, {"name", "T_K", "A_lump_dB", "length_m", "alpha_dB_per_m", "alpha_table"},
                        "chain stage");
    ThermalStage st;
    st.name = value_or<std::string>(s, "name", "stage" + std::to_string(spec.stages.size()));
    st.temperature = required<double>(s, "T_K", "chain stage");
    st.lumped_db = value_or(s, "A_lump_dB", 0.0);
    st.length_m = value_or(s, "length_m", 0.0);
    st.alpha_db_per_m = value_or(s, "alpha_dB_per_m", 0.0);
    st.alpha_table = value_or(s, "alpha_table", std::vector<std::pair<double, double>>{});
    spec.stages.push_back(std::move(st));
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const ChainSpec& spec) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : spec.stages) {
    nlohmann::json js = {{"name", s.name},
                         {"T_K", s.temperature},
                         {"A_lump_dB", s.lumped_db},
                         {"length_m", s.length_m},
                         {"alpha_dB_per_m", s.alpha_db_per_m}};
    if (!s.alpha_table.empty()) js["alpha_table"] = s.alpha_table;
    stages.push_back(std::move(js));
  }
  return {{"source_temperature_K", spec.source_temperature}, {"stages", std::move(stages)}};
}

void ReadoutChainParams::validate() const {
  const std::size_t n = freqs.size();
  if (gain.size() != n || noise_temperature.size() != n)
    throw DomainError("readout chain: parameter vectors must match the grid");
  if ((!sigma_gain.empty() && sigma_gain.size() != n) ||
      (!sigma_noise_temperature.empty() && sigma_noise_temperature.size() != n))
    throw DomainError("readout chain: uncertainty vectors must match the grid");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(gain[i] > 0.0)) throw DomainError("readout chain: G_sys must be positive");
    if (i > 0 && !(freqs[i] > freqs[i - 1]))
      throw DomainError("readout chain: grid must be ascending");
  }
}

double chain_forward_psd(const ReadoutChainParams& chain, std::size_t i, double n_at_plane) {
  return psd_from_occupation(n_at_plane, chain.freqs.at(i), chain.point(i));
}

}  // namespace cryonoise
