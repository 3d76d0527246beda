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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryonoise/sparams.hpp"
#include "cryonoise/thermal_chain.hpp"

namespace cryonoise {

/// PSDs recorded at one source temperature, one value per grid frequency.
struct SweepRecord {
  double temperature = 0.0;  // K
  std::vector<double> psd;   // W/Hz
};

/// A variable-temperature-source sweep. Without a source model the source
/// is taken as ideal (matched, isolated).
struct PlanckSweep {
  std::vector<Frequency> grid;
  std::vector<SweepRecord> records;
  std::optional<NoiseSourceModel> source;
  /// Optional per-record variances (same shape as records[k].psd) used as
  /// inverse weights. Uniform weighting when empty.
  std::vector<std::vector<double>> variances;

  void validate() const;
};

struct PlanckFitPoint {
  Frequency freq;
  double gain = 0.0;               // G_sys, linear
  double noise_temperature = 0.0;  // T_sys, K
  double sigma_gain = 0.0;
  double sigma_noise_temperature = 0.0;
  double covariance = 0.0;         // cov(G_sys, T_sys)
  double residual_rms = 0.0;       // W/Hz
  std::size_t points = 0;
  std::size_t dof = 0;
  bool nonpositive_gain = false;   // diagnostic failure
  bool negative_noise_temperature = false;  // reported, not clamped
};

struct PlanckFitResult {
  std::vector<PlanckFitPoint> points;

  bool ok() const;
  ReadoutChainParams to_readout_chain() const;
};

struct FitOptions {
  unsigned threads = 1;
};

/// Per-frequency fit of
///   S = G_sys [ (1 - |S_pp|^2) hf/2 coth(hf / 2k_B T) + hf/2 |S_pq|^2 + k_B T_sys ].
/// The model is affine in X = hf N_pow(T): S = a X + b with a = G_sys and
/// b = G_sys k_B T_sys, so it is solved as exact (weighted) linear least
/// squares. Uncertainties come from the regression covariance scaled by the
/// residual variance. Throws DomainError with fewer than two distinct
/// temperatures.
PlanckFitResult fit_planck(const PlanckSweep& sweep, const FitOptions& opts = {});

struct PsdPoint {
  double temperature = 0.0;
  double psd = 0.0;
};

/// Exact two-temperature solution with an ideal source. Requires hot > cold.
ChainPoint y_factor(PsdPoint hot, PsdPoint cold, Frequency f);

/// Unfolds a fit taken through a path of transmission A_s in front of the
/// chain (G~ = G_sys A_s, N~ = (1 - A_s)/2A_s + k_B T_sys / hf A_s) into
/// the bare chain parameters. Requires 0 < A_s <= 1.
ReadoutChainParams extract_substitution(const PlanckFitResult& chain_fit, double path_transmission);
ReadoutChainParams extract_substitution(const PlanckFitResult& chain_fit,
                                        std::span<const double> path_transmission);

struct AddedNoisePoint {
  Frequency freq;
  double gain_sys = 0.0;
  double noise_temperature = 0.0;
  double sigma_gain_sys = 0.0;
  double sigma_noise_temperature = 0.0;
  double n_out = 0.0;
  double n_add = 0.0;
  double gain = 0.0;  // DUT gain used
  double sigma_n_add = 0.0;
  double quantum_limit = 0.0;
  bool negative_output = false;  // chain miscalibration indicator
};

struct AddedNoiseResult {
  std::vector<AddedNoisePoint> points;

  /// Arithmetic mean of n_add over grid points with f_lo <= f <= f_hi.
  double band_average(Frequency lo, Frequency hi) const;
};

struct AddedNoiseInputs {
  std::vector<double> psd;         // DUT output PSD per chain frequency, W/Hz
  std::vector<double> gain;        // DUT linear gain per frequency
  std::vector<double> n_in;        // input occupation; empty -> vacuum 1/2
  std::vector<double> sigma_psd;   // optional
  std::vector<double> sigma_gain;  // optional
};

/// N_out = (psd / G_sys - k_B T_sys) / hf,  N_add = N_out / G - N_in, with
/// first-order propagation of independent uncertainties.
AddedNoiseResult extract_added_noise(const AddedNoiseInputs& in, const ReadoutChainParams& chain);

// Sweep CSV: header with freq_hz, T_vts_K, psd_W_per_Hz (any order). A new
// record starts whenever T_vts_K changes between consecutive rows; every
// record must cover the same frequencies.
PlanckSweep parse_sweep_csv(std::string_view text);
std::string write_sweep_csv(const PlanckSweep& sweep);

/// Results CSV with columns freq_hz, gsys_linear, gsys_db, tsys_K, sigma_gsys,
/// sigma_tsys, n_out, n_add, sigma_n_add, quantum_limit. Added-noise
/// columns are left blank when `noise` is absent.
std::string results_csv(const PlanckFitResult& fit, const AddedNoiseResult* noise = nullptr);

nlohmann::json to_json(const PlanckFitResult& fit);
nlohmann::json to_json(const AddedNoiseResult& r);
PlanckFitResult planck_fit_from_json(const nlohmann::json& j);

}  // namespace cryonoise
