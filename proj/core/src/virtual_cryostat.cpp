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

#include "cryonoise/virtual_cryostat.hpp"

#include <cmath>
#include <numbers>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"

namespace cryonoise {
namespace {

constexpr std::uint64_t kVnaStream = 0;
constexpr std::uint64_t kSpectrumStream = 6;
constexpr std::uint64_t kThermometerStream = 12;
constexpr std::size_t kStreams = 13;

Complex delay(Frequency f, double seconds) {
  return std::polar(1.0, -2.0 * std::numbers::pi * f.hz() * seconds);
}

double amplitude(double db) { return std::pow(10.0, db / 20.0); }

std::uint64_t throw_index(Throw t) { return static_cast<std::uint64_t>(t); }

SMatrix reflect(Complex gamma) { return {gamma, 0.0, 0.0, gamma}; }

}  // namespace

double DutModel::gain() const { return std::pow(10.0, gain_db / 10.0); }

SMatrix DutModel::sparams(Frequency f) const {
  const Complex d = delay(f, delay_s);
  return {s11, amplitude(-isolation_db) * d, std::sqrt(gain()) * d, s22};
}

double DutModel::true_added_noise(Frequency f) const {
  return output_occupation(f, [](Frequency) { return 0.5; }) / gain() - 0.5;
}

ChainPoint ChainTruth::at(Frequency f) const {
  const double dghz = f.hz() / 1e9 - 4.0;
  return {std::pow(10.0, (gain_db + gain_slope_db_per_ghz * dghz) / 10.0),
          t_sys + t_sys_slope_k_per_ghz * dghz};
}

SMatrix VtsModel::sparams() const {
  const double a = amplitude(-attenuation_db);
  return {s11, a, a, s22};
}

ErrorTerms ErrorBoxTruth::at(Frequency f) const {
  const Complex p1 = delay(f, delay1_s);
  const Complex p2 = delay(f, delay2_s);
  const Complex e10f = e10 * p1, e01f = e01 * p1;
  const Complex e32f = e32 * p2, e23f = e23 * p2;
  ErrorTerms t;
  t.port1 = {e00, e11, e10f * e01f};
  t.port2 = {e33, e22, e23f * e32f};
  t.transmission_fwd = e10f * e32f;
  t.transmission_rev = e23f * e01f;
  return t;
}

VirtualCryostat::VirtualCryostat(VirtualCryostatConfig cfg, Topology topology)
    : cfg_(std::move(cfg)), topology_(topology), stream_calls_(kStreams, 0) {
  if (!(cfg_.vts.time_constant_s > 0.0)) throw ConfigError("VTS time constant must be positive");
  if (!(cfg_.vts.initial_temperature >= 0.0))
    throw ConfigError("VTS initial temperature must be non-negative");
  if (!(cfg_.sparam_sigma >= 0.0) || !(cfg_.thermometer_sigma >= 0.0))
    throw ConfigError("noise levels must be non-negative");
  if (!(cfg_.sweep_time_s >= 0.0)) throw ConfigError("sweep time must be non-negative");
  vts_temperature_ = cfg_.vts.initial_temperature;
  setpoint_ = vts_temperature_;
}

std::mt19937_64 VirtualCryostat::stream(std::uint64_t id) {
  const std::uint64_t call = stream_calls_[id]++;
  std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(call),
                    static_cast<std::uint32_t>(call >> 32)};
  return std::mt19937_64(seq);
}

void VirtualCryostat::advance(double dt) {
  if (dt <= 0.0) return;
  time_s_ += dt;
  vts_temperature_ =
      setpoint_ + (vts_temperature_ - setpoint_) * std::exp(-dt / cfg_.vts.time_constant_s);
}

void VirtualCryostat::set_setpoint(double kelvin) {
  if (!(kelvin >= 0.0)) throw DomainError("VTS setpoint must be non-negative");
  setpoint_ = kelvin;
}

double VirtualCryostat::read_temperature() {
  if (cfg_.thermometer_sigma == 0.0) return vts_temperature_;
  auto rng = stream(kThermometerStream);
  std::normal_distribution<double> gauss(0.0, cfg_.thermometer_sigma);
  return vts_temperature_ + gauss(rng);
}

bool VirtualCryostat::wait_stable(double tolerance, double timeout_s) {
  if (!(tolerance > 0.0)) throw DomainError("settling tolerance must be positive");
  const double gap = std::abs(vts_temperature_ - setpoint_);
  if (gap <= tolerance) return true;
  // Exponential approach: land at half the tolerance band.
  const double needed = cfg_.vts.time_constant_s * std::log(gap / (0.5 * tolerance));
  if (needed > timeout_s) {
    advance(timeout_s);
    return false;
  }
  advance(needed);
  vts_temperature_ = setpoint_ + std::copysign(0.5 * tolerance, vts_temperature_ - setpoint_);
  return true;
}

SMatrix VirtualCryostat::element(Frequency f) const {
  switch (selected_) {
    case Throw::dut: return cfg_.dut.sparams(f);
    case Throw::vts: return cfg_.vts.sparams();
    case Throw::short_std: return reflect(-1.0);
    case Throw::open_std: return reflect(1.0);
    case Throw::load_std: return reflect(0.0);
    case Throw::thru: return ideal_thru_matrix();
  }
  return {};
}

TwoPortSParams VirtualCryostat::measure_sparams(std::span<const Frequency> grid) {
  auto rng = stream(kVnaStream + throw_index(selected_));
  std::normal_distribution<double> gauss(0.0, cfg_.sparam_sigma / std::numbers::sqrt2);
  auto noise = [&] {
    if (cfg_.sparam_sigma == 0.0) return Complex{};
    const double re = gauss(rng);
    return Complex(re, gauss(rng));
  };
  std::vector<SMatrix> data;
  data.reserve(grid.size());
  for (Frequency f : grid) {
    SMatrix raw = embed(element(f), cfg_.error_boxes.at(f));
    raw.s11 += noise();
    raw.s21 += noise();
    raw.s12 += noise();
    raw.s22 += noise();
    data.push_back(raw);
  }
  advance(cfg_.sweep_time_s);
  return TwoPortSParams(std::vector<Frequency>(grid.begin(), grid.end()), std::move(data));
}

double VirtualCryostat::true_psd(Frequency f) const {
  const SMatrix v = cfg_.vts.sparams();
  auto vts_out = [&](Frequency g) {
    return source_output_occupation(std::norm(v.s22), std::norm(v.s21),
                                    planck_occupation(g, vts_temperature_)) +
           std::norm(v.s21) * (cfg_.input_occupation - 0.5);
  };
  double n = 0.5;
  switch (selected_) {
    case Throw::vts: n = vts_out(f); break;
    case Throw::dut:
      if (topology_ == Topology::serial)
        n = cfg_.dut.output_occupation(f, vts_out);
      else
        n = cfg_.dut.output_occupation(f, [&](Frequency) { return cfg_.input_occupation; });
      break;
    case Throw::thru: n = cfg_.input_occupation; break;
    default: break;
  }
  return psd_from_occupation(n, f, cfg_.chain.at(f));
}

std::vector<double> VirtualCryostat::measure_psd(std::span<const Frequency> grid, double rbw_hz,
                                                 std::uint64_t averages) {
  if (!(rbw_hz > 0.0)) throw DomainError("resolution bandwidth must be positive");
  if (averages == 0) throw DomainError("averaging count must be positive");
  auto rng = stream(kSpectrumStream + throw_index(selected_));
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(averages)));
  std::vector<double> out;
  out.reserve(grid.size());
  for (Frequency f : grid) {
    const double s = true_psd(f);
    out.push_back(cfg_.psd_noise ? s * (1.0 + gauss(rng)) : s);
  }
  advance(cfg_.sweep_time_s);
  return out;
}

VirtualCryostatConfig cryostat_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("cryostat config must be a JSON object");
  reject_unknown_keys(j,
                      {"seed", "dut", "chain", "vts", "error_boxes", "sparam_sigma", "psd_noise",
                       "thermometer_sigma_K", "input_occupation", "sweep_time_s"},
                      "cryostat config");
  VirtualCryostatConfig c;
  c.seed = value_or(j, "seed", c.seed);
  c.sparam_sigma = value_or(j, "sparam_sigma", c.sparam_sigma);
  c.psd_noise = value_or(j, "psd_noise", c.psd_noise);
  c.thermometer_sigma = value_or(j, "thermometer_sigma_K", c.thermometer_sigma);
  c.input_occupation = value_or(j, "input_occupation", c.input_occupation);
  c.sweep_time_s = value_or(j, "sweep_time_s", c.sweep_time_s);
  auto cplx = [](const nlohmann::json& o, const char* key, Complex fallback) {
    return o.contains(key) ? complex_from_json(o.at(key)) : fallback;
  };
  if (j.contains("dut")) {
    const auto& d = j.at("dut");
    reject_unknown_keys(d,
                        {"gain_db", "delay_s", "s11", "s22", "isolation_db", "n_excess", "pump_hz",
                         "modes"},
                        "dut");
    auto& m = c.dut;
    m.gain_db = value_or(d, "gain_db", m.gain_db);
    m.delay_s = value_or(d, "delay_s", m.delay_s);
    m.s11 = cplx(d, "s11", m.s11);
    m.s22 = cplx(d, "s22", m.s22);
    m.isolation_db = value_or(d, "isolation_db", m.isolation_db);
    m.n_excess = value_or(d, "n_excess", m.n_excess);
    m.pump_hz = value_or(d, "pump_hz", m.pump_hz);
    if (d.contains("modes")) {
      for (const auto& x : d.at("modes")) {
        reject_unknown_keys(x, {"n", "x2_forward", "x2_back"}, "dut mode");
        DutMode dm;
        dm.n = required<int>(x, "n", "dut mode");
        if (dm.n == 0) throw ConfigError("dut mode n = 0 is the signal itself");
        dm.x2_forward = value_or(x, "x2_forward", 0.0);
        dm.x2_back = value_or(x, "x2_back", 0.0);
        if (dm.x2_forward < 0.0 || dm.x2_back < 0.0)
          throw ConfigError("dut mode weights must be non-negative");
        m.modes.push_back(dm);
      }
    }
  }
  if (j.contains("chain")) {
    const auto& d = j.at("chain");
    reject_unknown_keys(d, {"gain_db", "gain_slope_db_per_ghz", "t_sys_K", "t_sys_slope_K_per_ghz"},
                        "chain");
    c.chain.gain_db = value_or(d, "gain_db", c.chain.gain_db);
    c.chain.gain_slope_db_per_ghz = value_or(d, "gain_slope_db_per_ghz", 0.0);
    c.chain.t_sys = value_or(d, "t_sys_K", c.chain.t_sys);
    c.chain.t_sys_slope_k_per_ghz = value_or(d, "t_sys_slope_K_per_ghz", 0.0);
  }
  if (j.contains("vts")) {
    const auto& d = j.at("vts");
    reject_unknown_keys(d, {"attenuation_db", "s11", "s22", "initial_temperature_K", "time_constant_s"},
                        "vts");
    c.vts.attenuation_db = value_or(d, "attenuation_db", c.vts.attenuation_db);
    c.vts.s11 = cplx(d, "s11", c.vts.s11);
    c.vts.s22 = cplx(d, "s22", c.vts.s22);
    c.vts.initial_temperature = value_or(d, "initial_temperature_K", c.vts.initial_temperature);
    c.vts.time_constant_s = value_or(d, "time_constant_s", c.vts.time_constant_s);
  }
  if (j.contains("error_boxes")) {
    const auto& d = j.at("error_boxes");
    reject_unknown_keys(d,
                        {"e00", "e11", "e10", "e01", "delay1_s", "e33", "e22", "e32", "e23",
                         "delay2_s"},
                        "error_boxes");
    auto& e = c.error_boxes;
    e.e00 = cplx(d, "e00", e.e00);
    e.e11 = cplx(d, "e11", e.e11);
    e.e10 = cplx(d, "e10", e.e10);
    e.e01 = cplx(d, "e01", e.e01);
    e.delay1_s = value_or(d, "delay1_s", e.delay1_s);
    e.e33 = cplx(d, "e33", e.e33);
    e.e22 = cplx(d, "e22", e.e22);
    e.e32 = cplx(d, "e32", e.e32);
    e.e23 = cplx(d, "e23", e.e23);
    e.delay2_s = value_or(d, "delay2_s", e.delay2_s);
  }
  return c;
}

nlohmann::json to_json(const VirtualCryostatConfig& c) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : c.dut.modes)
    modes.push_back({{"n", m.n}, {"x2_forward", m.x2_forward}, {"x2_back", m.x2_back}});
  const auto& e = c.error_boxes;
  return {
      {"seed", c.seed},
      {"dut",
       {{"gain_db", c.dut.gain_db},
        {"delay_s", c.dut.delay_s},
        {"s11", complex_to_json(c.dut.s11)},
        {"s22", complex_to_json(c.dut.s22)},
        {"isolation_db", c.dut.isolation_db},
        {"n_excess", c.dut.n_excess},
        {"pump_hz", c.dut.pump_hz},
        {"modes", std::move(modes)}}},
      {"chain",
       {{"gain_db", c.chain.gain_db},
        {"gain_slope_db_per_ghz", c.chain.gain_slope_db_per_ghz},
        {"t_sys_K", c.chain.t_sys},
        {"t_sys_slope_K_per_ghz", c.chain.t_sys_slope_k_per_ghz}}},
      {"vts",
       {{"attenuation_db", c.vts.attenuation_db},
        {"s11", complex_to_json(c.vts.s11)},
        {"s22", complex_to_json(c.vts.s22)},
        {"initial_temperature_K", c.vts.initial_temperature},
        {"time_constant_s", c.vts.time_constant_s}}},
      {"error_boxes",
       {{"e00", complex_to_json(e.e00)},
        {"e11", complex_to_json(e.e11)},
        {"e10", complex_to_json(e.e10)},
        {"e01", complex_to_json(e.e01)},
        {"delay1_s", e.delay1_s},
        {"e33", complex_to_json(e.e33)},
        {"e22", complex_to_json(e.e22)},
        {"e32", complex_to_json(e.e32)},
        {"e23", complex_to_json(e.e23)},
        {"delay2_s", e.delay2_s}}},
      {"sparam_sigma", c.sparam_sigma},
      {"psd_noise", c.psd_noise},
      {"thermometer_sigma_K", c.thermometer_sigma},
      {"input_occupation", c.input_occupation},
      {"sweep_time_s", c.sweep_time_s}};
}

}  // namespace cryonoise
