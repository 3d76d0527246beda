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

#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryonoise/instruments.hpp"
#include "cryonoise/solr.hpp"

namespace cryonoise {

/// Mode coupled into the DUT output at |f + n f_p|, n != 0.
struct DutMode {
  int n = -1;
  double x2_forward = 0.0;
  double x2_back = 0.0;
};

/// Hidden truth of the device under test. Output noise at signal f:
///   N_out = G N_in(f) + sum_n x2_fwd N_in(|f + n f_p|) + 1/2 sum_n x2_back + G n_excess.
/// A linear amplifier has no modes and n_excess equal to its added noise.
struct DutModel {
  double gain_db = 20.0;
  double delay_s = 0.5e-9;
  Complex s11{0.05, 0.02};
  Complex s22{0.03, -0.04};
  double isolation_db = 30.0;
  double n_excess = 1.0;
  double pump_hz = 8e9;
  std::vector<DutMode> modes;

  double gain() const;
  SMatrix sparams(Frequency f) const;
  /// N_out for input occupations given as a function of frequency.
  template <class InputOccupation>
  double output_occupation(Frequency f, InputOccupation&& n_in) const {
    const double g = gain();
    double n = g * n_in(f) + g * n_excess;
    for (const auto& m : modes) {
      const Frequency fm(std::abs(f.hz() + m.n * pump_hz));
      n += m.x2_forward * n_in(fm) + 0.5 * m.x2_back;
    }
    return n;
  }
  /// Added noise with vacuum at every input.
  double true_added_noise(Frequency f) const;
};

struct ChainTruth {
  double gain_db = 70.9;
  double gain_slope_db_per_ghz = 0.0;  // around 4 GHz
  double t_sys = 4.65;
  double t_sys_slope_k_per_ghz = 0.0;

  ChainPoint at(Frequency f) const;
};

struct VtsModel {
  double attenuation_db = 20.0;
  Complex s11{0.02, 0.0};
  Complex s22{0.02, 0.01};
  double initial_temperature = 0.12;  // K, resting temperature
  double time_constant_s = 30.0;

  SMatrix sparams() const;
};

/// Per-port physical error-box coefficients; tracking terms acquire a
/// delay phase exp(-j 2 pi f delay).
struct ErrorBoxTruth {
  Complex e00{0.05, 0.01}, e11{0.08, -0.03}, e10{0.9, 0.05}, e01{0.85, -0.02};
  double delay1_s = 2e-9;
  Complex e33{-0.03, 0.04}, e22{0.06, 0.02}, e32{0.95, 0.0}, e23{0.8, 0.1};
  double delay2_s = 3e-9;

  ErrorTerms at(Frequency f) const;
};

struct VirtualCryostatConfig {
  std::uint64_t seed = 1;
  DutModel dut;
  ChainTruth chain;
  VtsModel vts;
  ErrorBoxTruth error_boxes;
  double sparam_sigma = 1e-4;  // complex Gaussian per raw S entry
  bool psd_noise = true;       // relative sigma 1/sqrt(averages)
  double thermometer_sigma = 0.0;
  double input_occupation = 0.5;  // noise reaching the DUT/VTS input port
  double sweep_time_s = 1.0;
};

VirtualCryostatConfig cryostat_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VirtualCryostatConfig& c);

enum class Topology { substitution, serial };

/// Simulated dilution-refrigerator setup behind the instrument interfaces.
/// The substitution topology connects DUT or VTS between the switches;
/// the serial topology places the VTS at the DUT input when the DUT throw
/// is selected. Simulated time only advances inside instrument calls.
class VirtualCryostat final : public SwitchController,
                              public TemperatureController,
                              public VectorAnalyzer,
                              public SpectrumAnalyzer,
                              public Clock {
 public:
  explicit VirtualCryostat(VirtualCryostatConfig cfg,
                           Topology topology = Topology::substitution);

  InstrumentSuite suite() { return {this, this, this, this, this}; }
  const VirtualCryostatConfig& config() const { return cfg_; }

  void select(Throw t) override { selected_ = t; }
  Throw selected() const override { return selected_; }

  void set_setpoint(double kelvin) override;
  double read_temperature() override;
  bool wait_stable(double tolerance, double timeout_s) override;

  TwoPortSParams measure_sparams(std::span<const Frequency> grid) override;
  std::vector<double> measure_psd(std::span<const Frequency> grid, double rbw_hz,
                                  std::uint64_t averages) override;

  double now() const override { return time_s_; }

  /// Physical temperature of the VTS body.
  double vts_temperature() const { return vts_temperature_; }
  /// Noiseless PSD for the current switch state.
  double true_psd(Frequency f) const;

 private:
  SMatrix element(Frequency f) const;
  std::mt19937_64 stream(std::uint64_t id);
  void advance(double dt);

  VirtualCryostatConfig cfg_;
  Topology topology_;
  Throw selected_ = Throw::dut;
  double time_s_ = 0.0;
  double setpoint_ = 0.0;
  double vts_temperature_ = 0.0;
  std::vector<std::uint64_t> stream_calls_;
};

}  // namespace cryonoise
