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

#include "cryonoise/serial_bias.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"

namespace cryonoise {
namespace {

bool is_spur(int n) { return n != 0 && n != -1; }

double n_source(const SerialBiasConfig& cfg, double freq_hz, double epsilon) {
  return source_occupation(cfg.kind, Frequency(freq_hz), cfg.signal, epsilon, cfg.bath_temperature);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

const char* kind_name(SourceKind k) { return k == SourceKind::thermal ? "thermal" : "shot"; }

SourceKind kind_from_name(const std::string& s) {
  if (s == "thermal") return SourceKind::thermal;
  if (s == "shot") return SourceKind::shot;
  throw ConfigError("unknown source kind '" + s + "' (expected thermal or shot)");
}

}  // namespace

void SerialBiasConfig::validate() const {
  if (!(signal.hz() > 0.0) || !(pump.hz() > 0.0)) throw DomainError("frequencies must be positive");
  if (!(idler().hz() > 0.0)) throw DomainError("idler frequency |f_s - f_p| must be positive");
  if (!(gain > 0.0)) throw DomainError("DUT gain must be positive");
  if (!(a_signal > 0.0 && a_signal <= 1.0) || !(a_idler > 0.0 && a_idler <= 1.0))
    throw DomainError("path transmissions must lie in (0, 1]");
  if (!(g_sys > 0.0)) throw DomainError("G_sys must be positive");
  if (!(t_sys >= 0.0)) throw DomainError("T_sys must be non-negative");
  if (!(n_exc_loss >= 0.0)) throw DomainError("N_exc_loss must be non-negative");
  bool idler_present = false;
  for (const auto& m : modes) {
    if (!(m.frequency_hz > 0.0))
      throw DomainError("mode n=" + std::to_string(m.n) + " has non-positive frequency");
    if (!(m.x2_forward >= 0.0) || !(m.x2_back >= 0.0))
      throw DomainError("mode n=" + std::to_string(m.n) + " has a negative weight");
    if (!(m.transmission > 0.0 && m.transmission <= 1.0))
      throw DomainError("mode n=" + std::to_string(m.n) + " transmission must lie in (0, 1]");
    idler_present = idler_present || m.n == -1;
  }
  if (!idler_present) throw DomainError("mode set must contain the idler (n = -1)");
  std::set<double> distinct;
  for (double e : epsilon_grid) {
    if (!std::isfinite(e)) throw DomainError("epsilon grid contains a non-finite value");
    if (kind == SourceKind::thermal && e < 0.0)
      throw DomainError("thermal epsilon must be non-negative");
    distinct.insert(e);
  }
  if (distinct.size() < 2) throw DomainError("epsilon grid needs at least 2 distinct values");
  if (!grid_temperatures.empty() && grid_temperatures.size() != epsilon_grid.size())
    throw DomainError("grid_temperatures must match the epsilon grid");
}

double n_cal(const SerialBiasConfig& cfg, double epsilon) {
  return n_source(cfg, cfg.signal.hz(), epsilon) +
         cfg.a_idler / cfg.a_signal * n_source(cfg, cfg.idler().hz(), epsilon);
}

double delta_n(const SerialBiasConfig& cfg, double epsilon) {
  double sum = 0.0;
  for (const auto& m : cfg.modes) {
    if (!is_spur(m.n) || m.x2_forward == 0.0) continue;
    sum += m.transmission * m.x2_forward / (cfg.a_signal * cfg.gain) *
           n_source(cfg, m.frequency_hz, epsilon);
  }
  return sum;
}

double n_zero(const SerialBiasConfig& cfg) {
  const double as = cfg.a_signal;
  double back = 0.0, loss = 0.0;
  for (const auto& m : cfg.modes) {
    back += m.x2_back;
    if (is_spur(m.n)) loss += 0.5 * (1.0 - m.transmission) * m.x2_forward;
  }
  return (2.0 - as - cfg.a_idler) / (2.0 * as) +
         constants::boltzmann * cfg.t_sys / (cfg.signal.photon_energy() * cfg.gain * as) +
         (0.5 * back + loss) / (cfg.gain * as) + cfg.n_exc_loss / as;
}

std::vector<SerialPoint> synth_measured(const SerialBiasConfig& cfg,
                                        std::optional<MeasurementNoise> noise) {
  cfg.validate();
  const double g_eff = cfg.effective_gain();
  const double n0 = n_zero(cfg);
  std::mt19937_64 rng(noise ? noise->seed : 0);
  std::normal_distribution<double> gauss(0.0, noise ? noise->sigma : 0.0);

  std::vector<SerialPoint> out;
  out.reserve(cfg.epsilon_grid.size());
  for (std::size_t k = 0; k < cfg.epsilon_grid.size(); ++k) {
    SerialPoint p;
    p.epsilon = cfg.epsilon_grid[k];
    if (!cfg.grid_temperatures.empty())
      p.temperature = cfg.grid_temperatures[k];
    else if (cfg.kind == SourceKind::thermal)
      p.temperature = temperature_from_epsilon(cfg.signal, p.epsilon);
    else
      p.temperature = std::numeric_limits<double>::quiet_NaN();
    p.n_cal = n_cal(cfg, p.epsilon);
    p.delta_n = delta_n(cfg, p.epsilon);
    p.n_meas = g_eff * (p.n_cal + n0 + p.delta_n);
    if (noise && noise->sigma > 0.0) p.n_meas += gauss(rng);
    out.push_back(p);
  }
  return out;
}

OlsFit oracle_ols(const std::vector<SerialPoint>& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n < 2) throw DomainError("oracle_ols needs at least 2 points");
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = data[static_cast<std::size_t>(i)].n_cal;
    a(i, 1) = 1.0;
    y(i) = data[static_cast<std::size_t>(i)].n_meas;
  }
  auto qr = a.colPivHouseholderQr();
  if (qr.rank() < 2) throw DomainError("degenerate epsilon grid: N_cal does not vary");
  const Eigen::Vector2d c = qr.solve(y);
  OlsFit fit;
  fit.slope = c(0);
  fit.intercept = c(1);
  fit.gain_fit = fit.slope;
  fit.noise_fit = fit.intercept / fit.slope;
  return fit;
}

Asymptotics asymptotic_prediction(const SerialBiasConfig& cfg) {
  cfg.validate();
  const double ws = cfg.signal.hz();
  const double wi = cfg.idler().hz();
  Asymptotics a;
  a.alpha = 1.0 + cfg.a_signal * ws / (cfg.a_idler * wi);
  a.alpha_limit = 1.0 + cfg.a_idler * ws / (cfg.a_signal * wi);
  for (const auto& m : cfg.modes) {
    if (!is_spur(m.n)) continue;
    a.gamma += m.transmission * m.x2_forward * ws / (cfg.a_signal * cfg.gain * m.frequency_hz);
  }
  a.beta_asym = a.gamma / a.alpha;
  a.beta_asym_limit = a.gamma / a.alpha_limit;
  a.predicted_error = -(delta_n(cfg, 0.0) + a.beta_asym / (1.0 + a.beta_asym) * n_zero(cfg));
  return a;
}

SerialBiasReport analytic_bias(const SerialBiasConfig& cfg) {
  SerialBiasReport r;
  r.points = synth_measured(cfg);
  const double n = static_cast<double>(r.points.size());
  double mc = 0.0, md = 0.0;
  for (const auto& p : r.points) {
    mc += p.n_cal;
    md += p.delta_n;
  }
  mc /= n;
  md /= n;
  double var = 0.0, cov = 0.0;
  for (const auto& p : r.points) {
    var += (p.n_cal - mc) * (p.n_cal - mc);
    cov += (p.delta_n - md) * (p.n_cal - mc);
  }
  var /= n;
  cov /= n;
  if (!(var > 0.0)) throw DomainError("degenerate epsilon grid: Var(N_cal) = 0");

  r.beta = cov / var;
  r.gain_true = cfg.effective_gain();
  r.n0 = n_zero(cfg);
  r.noise_true_zero = r.n0 + delta_n(cfg, 0.0);
  r.mean_delta_n = md;
  r.mean_n_cal = mc;
  r.gain_fit_analytic = r.gain_true * (1.0 + r.beta);
  r.noise_fit_analytic = (r.n0 + md - r.beta * mc) / (1.0 + r.beta);
  r.noise_error = r.noise_fit_analytic - r.noise_true_zero;
  r.asymptotics = asymptotic_prediction(cfg);
  return r;
}

SerialBiasReport run_bias_analysis(const SerialBiasConfig& cfg, std::optional<MeasurementNoise> noise) {
  SerialBiasReport r = analytic_bias(cfg);
  if (noise) {
    r.points = synth_measured(cfg, noise);
    r.seed = noise->seed;
  }
  r.oracle = oracle_ols(r.points);
  return r;
}

double interpolate_transmission(const TransmissionTable& table, double freq_hz) {
  if (table.empty()) return 1.0;
  if (freq_hz <= table.front().first) return table.front().second;
  if (freq_hz >= table.back().first) return table.back().second;
  auto hi = std::upper_bound(table.begin(), table.end(), freq_hz,
                             [](double f, const auto& e) { return f < e.first; });
  auto lo = hi - 1;
  const double t = (freq_hz - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

double suppl_forward_weight(int n, double gain) {
  if (n >= 0) return std::pow(gain, 1.0 / (n + 1));
  return std::pow(gain - 1.0, 1.0 / (-n));
}

SerialBiasConfig build_suppl_config(const SupplConfigOptions& opts) {
  const double g = db_to_linear(opts.gain_db);
  if (!(g > 1.0)) throw DomainError("reference configuration requires DUT gain G > 1");
  if (opts.temperatures < 2) throw DomainError("need at least 2 grid temperatures");
  if (!(opts.t_max > opts.t_min) || opts.t_min < 0.0)
    throw DomainError("temperature span must satisfy 0 <= t_min < t_max");
  for (std::size_t i = 1; i < opts.transmission.size(); ++i)
    if (!(opts.transmission[i].first > opts.transmission[i - 1].first))
      throw DomainError("transmission table frequencies must be ascending");

  SerialBiasConfig cfg;
  cfg.signal = opts.signal;
  cfg.pump = opts.pump;
  cfg.gain = g;
  cfg.a_signal = interpolate_transmission(opts.transmission, cfg.signal.hz());
  cfg.a_idler = interpolate_transmission(opts.transmission, cfg.idler().hz());
  cfg.g_sys = db_to_linear(opts.g_sys_db);
  cfg.t_sys = opts.t_sys;
  cfg.kind = SourceKind::thermal;

  const std::vector<int> order = opts.spurs ? std::vector<int>{0, -1, 1, -2, 2, 3, -4, 4, -5}
                                            : std::vector<int>{0, -1};
  for (int n : order) {
    ModeSpec m;
    m.n = n;
    m.frequency_hz = std::abs(cfg.signal.hz() + n * cfg.pump.hz());
    m.transmission = interpolate_transmission(opts.transmission, m.frequency_hz);
    m.x2_forward = suppl_forward_weight(n, g);
    m.x2_back = m.x2_forward / 100.0;
    cfg.modes.push_back(m);
  }

  const std::size_t nt = opts.temperatures;
  for (std::size_t k = 0; k < nt; ++k) {
    const double t = opts.t_min + (opts.t_max - opts.t_min) * static_cast<double>(k) /
                                      static_cast<double>(nt - 1);
    cfg.grid_temperatures.push_back(t);
    cfg.epsilon_grid.push_back(epsilon_from_temperature(cfg.signal, t));
  }
  cfg.validate();
  return cfg;
}

SerialBiasConfig serial_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("serial bias config must be a JSON object");
  if (j.contains("suppl")) {
    reject_unknown_keys(j, {"suppl"}, "serial bias config");
    const auto& s = j.at("suppl");
    reject_unknown_keys(s,
                        {"gain_db", "signal_hz", "pump_hz", "transmission", "g_sys_db", "t_sys_K",
                         "t_min_K", "t_max_K", "temperatures", "spurs"},
                        "suppl");
    SupplConfigOptions o;
    o.gain_db = value_or(s, "gain_db", o.gain_db);
    o.signal = Frequency(value_or(s, "signal_hz", o.signal.hz()));
    o.pump = Frequency(value_or(s, "pump_hz", o.pump.hz()));
    o.g_sys_db = value_or(s, "g_sys_db", o.g_sys_db);
    o.t_sys = value_or(s, "t_sys_K", o.t_sys);
    o.t_min = value_or(s, "t_min_K", o.t_min);
    o.t_max = value_or(s, "t_max_K", o.t_max);
    o.temperatures = value_or(s, "temperatures", o.temperatures);
    o.spurs = value_or(s, "spurs", o.spurs);
    if (s.contains("transmission")) {
      for (const auto& row : s.at("transmission")) {
        if (!row.is_array() || row.size() != 2)
          throw ConfigError("transmission rows must be [freq_hz, A] pairs");
        o.transmission.emplace_back(row[0].get<double>(), row[1].get<double>());
      }
    }
    return build_suppl_config(o);
  }

  reject_unknown_keys(j,
                      {"signal_hz", "pump_hz", "gain", "a_signal", "a_idler", "modes", "g_sys",
                       "t_sys_K", "kind", "epsilon_grid", "temperatures_K", "n_exc_loss",
                       "bath_temperature_K"},
                      "serial bias config");
  SerialBiasConfig cfg;
  cfg.signal = Frequency(value_or(j, "signal_hz", cfg.signal.hz()));
  cfg.pump = Frequency(value_or(j, "pump_hz", cfg.pump.hz()));
  cfg.gain = value_or(j, "gain", cfg.gain);
  cfg.a_signal = value_or(j, "a_signal", cfg.a_signal);
  cfg.a_idler = value_or(j, "a_idler", cfg.a_idler);
  cfg.g_sys = value_or(j, "g_sys", cfg.g_sys);
  cfg.t_sys = value_or(j, "t_sys_K", cfg.t_sys);
  cfg.kind = kind_from_name(value_or<std::string>(j, "kind", "thermal"));
  cfg.n_exc_loss = value_or(j, "n_exc_loss", cfg.n_exc_loss);
  cfg.bath_temperature = value_or(j, "bath_temperature_K", cfg.bath_temperature);
  for (const auto& m : required<nlohmann::json>(j, "modes", "serial bias config")) {
    reject_unknown_keys(m, {"n", "frequency_hz", "transmission", "x2_forward", "x2_back"}, "mode");
    ModeSpec s;
    s.n = required<int>(m, "n", "mode");
    s.frequency_hz =
        value_or(m, "frequency_hz", std::abs(cfg.signal.hz() + s.n * cfg.pump.hz()));
    s.transmission = value_or(m, "transmission", 1.0);
    s.x2_forward = value_or(m, "x2_forward", 0.0);
    s.x2_back = value_or(m, "x2_back", 0.0);
    cfg.modes.push_back(s);
  }
  const bool has_eps = j.contains("epsilon_grid");
  const bool has_t = j.contains("temperatures_K");
  if (has_eps == has_t)
    throw ConfigError("serial bias config needs exactly one of epsilon_grid, temperatures_K");
  if (has_eps) {
    cfg.epsilon_grid = j.at("epsilon_grid").get<std::vector<double>>();
  } else {
    if (cfg.kind != SourceKind::thermal)
      throw ConfigError("temperatures_K grid requires the thermal source kind");
    cfg.grid_temperatures = j.at("temperatures_K").get<std::vector<double>>();
    for (double t : cfg.grid_temperatures)
      cfg.epsilon_grid.push_back(epsilon_from_temperature(cfg.signal, t));
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const SerialBiasConfig& cfg) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : cfg.modes)
    modes.push_back({{"n", m.n},
                     {"frequency_hz", m.frequency_hz},
                     {"transmission", m.transmission},
                     {"x2_forward", m.x2_forward},
                     {"x2_back", m.x2_back}});
  nlohmann::json j = {{"signal_hz", cfg.signal.hz()},
                      {"pump_hz", cfg.pump.hz()},
                      {"gain", cfg.gain},
                      {"a_signal", cfg.a_signal},
                      {"a_idler", cfg.a_idler},
                      {"modes", std::move(modes)},
                      {"g_sys", cfg.g_sys},
                      {"t_sys_K", cfg.t_sys},
                      {"kind", kind_name(cfg.kind)},
                      {"n_exc_loss", cfg.n_exc_loss},
                      {"bath_temperature_K", cfg.bath_temperature}};
  if (!cfg.grid_temperatures.empty())
    j["temperatures_K"] = cfg.grid_temperatures;
  else
    j["epsilon_grid"] = cfg.epsilon_grid;
  return j;
}

nlohmann::json to_json(const SerialBiasReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points) {
    nlohmann::json q = {{"epsilon", p.epsilon},
                        {"N_cal", p.n_cal},
                        {"delta_N", p.delta_n},
                        {"N_meas", p.n_meas}};
    q["T_K"] = std::isnan(p.temperature) ? nlohmann::json(nullptr) : nlohmann::json(p.temperature);
    pts.push_back(std::move(q));
  }
  const auto& a = r.asymptotics;
  nlohmann::json j = {
      {"beta", r.beta},
      {"gain_true", r.gain_true},
      {"noise_true_zero", r.noise_true_zero},
      {"N_0", r.n0},
      {"mean_delta_N", r.mean_delta_n},
      {"mean_N_cal", r.mean_n_cal},
      {"analytic", {{"gain_fit", r.gain_fit_analytic}, {"noise_fit", r.noise_fit_analytic}}},
      {"noise_error", r.noise_error},
      {"asymptotic",
       {{"alpha", a.alpha},
        {"alpha_limit", a.alpha_limit},
        {"gamma", a.gamma},
        {"beta_asym", a.beta_asym},
        {"beta_asym_limit", a.beta_asym_limit},
        {"predicted_error", a.predicted_error}}},
      {"points", std::move(pts)}};
  if (r.oracle) {
    j["oracle"] = {{"slope", r.oracle->slope},
                   {"intercept", r.oracle->intercept},
                   {"gain_fit", r.oracle->gain_fit},
                   {"noise_fit", r.oracle->noise_fit}};
  }
  j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
  return j;
}

std::string residual_csv(const SerialBiasReport& r) {
  double slope = r.gain_fit_analytic;
  double intercept = r.gain_fit_analytic * r.noise_fit_analytic;
  if (r.oracle) {
    slope = r.oracle->slope;
    intercept = r.oracle->intercept;
  }
  auto pts = r.points;
  std::stable_sort(pts.begin(), pts.end(),
                   [](const SerialPoint& a, const SerialPoint& b) { return a.epsilon < b.epsilon; });
  std::string out = "epsilon,T_K,N_cal,delta_N,N_meas,affine_fit,residual\n";
  char buf[64];
  for (const auto& p : pts) {
    const double fit = slope * p.n_cal + intercept;
    for (double v : {p.epsilon, p.temperature, p.n_cal, p.delta_n, p.n_meas, fit}) {
      if (!std::isnan(v)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
      }
      out += ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", p.n_meas - fit);
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace cryonoise
