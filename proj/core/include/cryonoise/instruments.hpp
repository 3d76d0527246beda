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
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryonoise/sparams.hpp"

namespace cryonoise {

/// Switch throws reachable from the two cryogenic switches.
enum class Throw { dut, vts, short_std, open_std, load_std, thru };

std::string_view to_string(Throw t);
Throw throw_from_string(std::string_view s);

class Clock {
 public:
  virtual ~Clock() = default;
  /// Seconds since the start of the run.
  virtual double now() const = 0;
};

class SwitchController {
 public:
  virtual ~SwitchController() = default;
  virtual void select(Throw t) = 0;
  virtual Throw selected() const = 0;
};

class TemperatureController {
 public:
  virtual ~TemperatureController() = default;
  virtual void set_setpoint(double kelvin) = 0;
  virtual double read_temperature() = 0;
  /// Blocks until the reading stays within `tolerance` of the setpoint.
  /// Returns false on timeout.
  virtual bool wait_stable(double tolerance, double timeout_s) = 0;
};

class VectorAnalyzer {
 public:
  virtual ~VectorAnalyzer() = default;
  /// Raw (uncorrected) two-port S-parameters of whatever the switches select.
  virtual TwoPortSParams measure_sparams(std::span<const Frequency> grid) = 0;
};

class SpectrumAnalyzer {
 public:
  virtual ~SpectrumAnalyzer() = default;
  /// Output PSD in W/Hz at the readout port.
  virtual std::vector<double> measure_psd(std::span<const Frequency> grid, double rbw_hz,
                                          std::uint64_t averages) = 0;
};

struct InstrumentSuite {
  SwitchController* switches = nullptr;
  TemperatureController* temperature = nullptr;
  VectorAnalyzer* vna = nullptr;
  SpectrumAnalyzer* spectrum = nullptr;
  const Clock* clock = nullptr;
};

struct LogEvent {
  std::uint64_t seq = 0;
  double time_s = 0.0;
  int step = 0;
  std::string instrument;
  std::string action;
  nlohmann::json params;
};

/// Append-only record of instrument calls. Safe to read from a monitoring
/// thread while the protocol runner appends.
class RunLog {
 public:
  void set_step(int step);
  int step() const;
  void append(double time_s, std::string instrument, std::string action, nlohmann::json params);
  std::vector<LogEvent> snapshot() const;
  std::size_t size() const;
  /// One JSON object per line.
  std::string to_jsonl() const;

 private:
  mutable std::mutex mutex_;
  std::vector<LogEvent> events_;
  int step_ = 0;
};

nlohmann::json to_json(const LogEvent& e);

/// Wraps a suite so that every call is appended to `log` exactly once.
class LoggedSuite {
 public:
  LoggedSuite(InstrumentSuite inner, RunLog& log);
  LoggedSuite(const LoggedSuite&) = delete;
  LoggedSuite& operator=(const LoggedSuite&) = delete;

  InstrumentSuite suite() { return {&switches_, &temperature_, &vna_, &spectrum_, inner_.clock}; }

 private:
  struct Switch final : SwitchController {
    LoggedSuite* owner;
    explicit Switch(LoggedSuite* o) : owner(o) {}
    void select(Throw t) override;
    Throw selected() const override;
  };
  struct Temperature final : TemperatureController {
    LoggedSuite* owner;
    explicit Temperature(LoggedSuite* o) : owner(o) {}
    void set_setpoint(double kelvin) override;
    double read_temperature() override;
    bool wait_stable(double tolerance, double timeout_s) override;
  };
  struct Vna final : VectorAnalyzer {
    LoggedSuite* owner;
    explicit Vna(LoggedSuite* o) : owner(o) {}
    TwoPortSParams measure_sparams(std::span<const Frequency> grid) override;
  };
  struct Spectrum final : SpectrumAnalyzer {
    LoggedSuite* owner;
    explicit Spectrum(LoggedSuite* o) : owner(o) {}
    std::vector<double> measure_psd(std::span<const Frequency> grid, double rbw_hz,
                                    std::uint64_t averages) override;
  };

  double now() const { return inner_.clock ? inner_.clock->now() : 0.0; }

  InstrumentSuite inner_;
  RunLog& log_;
  Switch switches_{this};
  Temperature temperature_{this};
  Vna vna_{this};
  Spectrum spectrum_{this};
};

}  // namespace cryonoise
