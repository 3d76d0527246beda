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

// Bias of an affine readout calibration when the noise source sits in front
// of a nonlinear amplifier (serial placement). The measured flux is
//   N_meas(eps) = G~ [ N_cal(eps) + N_0 + dN(eps) ],
// and fitting it with a constant-noise affine model distorts both the gain
// and the noise estimate by beta = Cov(dN, N_cal) / Var(N_cal).

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryonoise/physics.hpp"

namespace cryonoise {

/// One frequency coupled to the output signal, w_n = |w_s + n w_p|.
/// n = 0 is the signal, n = -1 the idler, anything else a spur.
struct ModeSpec {
  int n = 0;
  double frequency_hz = 0.0;
  double transmission = 1.0;  // A_n, source-to-DUT path
  double x2_forward = 0.0;    // |x_{n->s}^{(1->2)}|^2
  double x2_back = 0.0;       // |x_{n->s}^{(2->2)}|^2
};

struct SerialBiasConfig {
  Frequency signal{4e9};
  Frequency pump{8e9};
  double gain = 100.0;  // DUT linear gain G
  double a_signal = 1.0;
  double a_idler = 1.0;
  std::vector<ModeSpec> modes;
  double g_sys = 1.0;
  double t_sys = 0.0;
  SourceKind kind = SourceKind::thermal;
  std::vector<double> epsilon_grid;
  /// Source temperatures behind the epsilon grid (thermal kind), for reporting.
  std::vector<double> grid_temperatures;
  double n_exc_loss = 0.0;
  double bath_temperature = 0.02;  // shot kind only

  Frequency idler() const { return Frequency(std::abs(signal.hz() - pump.hz())); }
  /// G~ = G_sys G A_s.
  double effective_gain() const { return g_sys * gain * a_signal; }
  void validate() const;
};

double n_cal(const SerialBiasConfig& cfg, double epsilon);
double delta_n(const SerialBiasConfig& cfg, double epsilon);
double n_zero(const SerialBiasConfig& cfg);

struct SerialPoint {
  double epsilon = 0.0;
  double temperature = 0.0;  // NaN when the grid is not thermal
  double n_cal = 0.0;
  double delta_n = 0.0;
  double n_meas = 0.0;
};

struct MeasurementNoise {
  double sigma = 0.0;  // additive Gaussian, in N_meas units
  std::uint64_t seed = 0;
};

std::vector<SerialPoint> synth_measured(const SerialBiasConfig& cfg,
                                        std::optional<MeasurementNoise> noise = std::nullopt);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double gain_fit = 0.0;   // = slope
  double noise_fit = 0.0;  // = intercept / slope
};

/// Brute-force least squares of N_meas on [N_cal, 1] via Householder QR.
OlsFit oracle_ols(const std::vector<SerialPoint>& data);

struct Asymptotics {
  double alpha = 0.0;        // 1 + A_s w_s / (A_i w_i)
  double alpha_limit = 0.0;  // 1 + A_i w_s / (A_s w_i), the large-eps slope of N_cal
  double gamma = 0.0;
  double beta_asym = 0.0;        // gamma / alpha
  double beta_asym_limit = 0.0;  // gamma / alpha_limit
  double predicted_error = 0.0;  // -[dN(0) + beta/(1+beta) N_0] with beta_asym
};

Asymptotics asymptotic_prediction(const SerialBiasConfig& cfg);

struct SerialBiasReport {
  double beta = 0.0;
  double gain_true = 0.0;   // G~
  double noise_true_zero = 0.0;  // N~(0) = N_0 + dN(0)
  double n0 = 0.0;
  double mean_delta_n = 0.0;
  double mean_n_cal = 0.0;
  double gain_fit_analytic = 0.0;
  double noise_fit_analytic = 0.0;
  double noise_error = 0.0;  // N~_fit - N~(0)
  std::optional<OlsFit> oracle;
  Asymptotics asymptotics;
  std::vector<SerialPoint> points;
  std::optional<std::uint64_t> seed;
};

/// Closed-form estimators with population moments over the epsilon grid.
/// Throws DomainError when Var(N_cal) vanishes.
SerialBiasReport analytic_bias(const SerialBiasConfig& cfg);

/// Full analysis: synthesis (optionally noisy), analytic estimators, the
/// OLS oracle on the synthesized data, and the asymptotic prediction.
SerialBiasReport run_bias_analysis(const SerialBiasConfig& cfg,
                                   std::optional<MeasurementNoise> noise = std::nullopt);

/// Linear transmission versus frequency, (freq_hz, A) pairs.
using TransmissionTable = std::vector<std::pair<double, double>>;
double interpolate_transmission(const TransmissionTable& table, double freq_hz);

struct SupplConfigOptions {
  double gain_db = 20.0;
  Frequency signal{4e9};
  Frequency pump{8e9};
  TransmissionTable transmission;  // empty -> lossless
  double g_sys_db = 70.9;
  double t_sys = 4.65;
  double t_min = 0.02;
  double t_max = 2.0;
  std::size_t temperatures = 10;
  bool spurs = true;
};

/// Intermodulation mode set n in {0, -1, 1, -2, 2, 3, -4, 4, -5} with
/// forward weights G^(1/(n+1)) for n >= 0 and (G-1)^(1/|n|) for n < 0, back
/// weights forward/100, and a thermal epsilon grid uniform in temperature.
SerialBiasConfig build_suppl_config(const SupplConfigOptions& opts = {});

/// Forward scattering weight assigned to mode n for DUT gain G.
double suppl_forward_weight(int n, double gain);

SerialBiasConfig serial_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SerialBiasConfig& cfg);
nlohmann::json to_json(const SerialBiasReport& r);
/// CSV columns: epsilon,T_K,N_cal,delta_N,N_meas,affine_fit,residual.
std::string residual_csv(const SerialBiasReport& r);

}  // namespace cryonoise
