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

#include "cryonoise/instruments.hpp"

#include <array>

#include "cryonoise/error.hpp"

namespace cryonoise {
namespace {

constexpr std::array<std::pair<Throw, std::string_view>, 6> kThrowNames{{
    {Throw::dut, "dut"},
    {Throw::vts, "vts"},
    {Throw::short_std, "short"},
    {Throw::open_std, "open"},
    {Throw::load_std, "load"},
    {Throw::thru, "thru"},
}};

nlohmann::json grid_params(std::span<const Frequency> grid) {
  if (grid.empty()) return {{"points", 0}};
  return {{"points", grid.size()}, {"start_hz", grid.front().hz()}, {"stop_hz", grid.back().hz()}};
}

}  // namespace

std::string_view to_string(Throw t) {
  for (const auto& [k, name] : kThrowNames)
    if (k == t) return name;
  return "unknown";
}

Throw throw_from_string(std::string_view s) {
  for (const auto& [k, name] : kThrowNames)
    if (name == s) return k;
  throw ConfigError("unknown switch throw '" + std::string(s) + "'");
}

void RunLog::set_step(int step) {
  std::lock_guard lock(mutex_);
  step_ = step;
}

int RunLog::step() const {
  std::lock_guard lock(mutex_);
  return step_;
}

void RunLog::append(double time_s, std::string instrument, std::string action,
                    nlohmann::json params) {
  std::lock_guard lock(mutex_);
  events_.push_back({events_.size(), time_s, step_, std::move(instrument), std::move(action),
                     std::move(params)});
}

std::vector<LogEvent> RunLog::snapshot() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::size_t RunLog::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

std::string RunLog::to_jsonl() const {
  std::string out;
  for (const auto& e : snapshot()) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const LogEvent& e) {
  return {{"seq", e.seq},
          {"time_s", e.time_s},
          {"step", e.step},
          {"instrument", e.instrument},
          {"action", e.action},
          {"params", e.params.is_null() ? nlohmann::json::object() : e.params}};
}

LoggedSuite::LoggedSuite(InstrumentSuite inner, RunLog& log) : inner_(inner), log_(log) {
  if (!inner_.switches || !inner_.temperature || !inner_.vna || !inner_.spectrum)
    throw ConfigError("instrument suite is incomplete");
}

void LoggedSuite::Switch::select(Throw t) {
  owner->log_.append(owner->now(), "switch", "select", {{"throw", to_string(t)}});
  owner->inner_.switches->select(t);
}

Throw LoggedSuite::Switch::selected() const { return owner->inner_.switches->selected(); }

void LoggedSuite::Temperature::set_setpoint(double kelvin) {
  owner->log_.append(owner->now(), "temperature", "set_setpoint", {{"kelvin", kelvin}});
  owner->inner_.temperature->set_setpoint(kelvin);
}

double LoggedSuite::Temperature::read_temperature() {
  const double t0 = owner->now();
  const double k = owner->inner_.temperature->read_temperature();
  owner->log_.append(t0, "temperature", "read", {{"kelvin", k}});
  return k;
}

bool LoggedSuite::Temperature::wait_stable(double tolerance, double timeout_s) {
  const double t0 = owner->now();
  const bool ok = owner->inner_.temperature->wait_stable(tolerance, timeout_s);
  owner->log_.append(t0, "temperature", "wait_stable",
                     {{"tolerance", tolerance}, {"timeout_s", timeout_s}, {"stable", ok}});
  return ok;
}

TwoPortSParams LoggedSuite::Vna::measure_sparams(std::span<const Frequency> grid) {
  owner->log_.append(owner->now(), "vna", "measure_sparams", grid_params(grid));
  return owner->inner_.vna->measure_sparams(grid);
}

std::vector<double> LoggedSuite::Spectrum::measure_psd(std::span<const Frequency> grid,
                                                       double rbw_hz, std::uint64_t averages) {
  auto params = grid_params(grid);
  params["rbw_hz"] = rbw_hz;
  params["averages"] = averages;
  owner->log_.append(owner->now(), "spectrum", "measure_psd", std::move(params));
  return owner->inner_.spectrum->measure_psd(grid, rbw_hz, averages);
}

}  // namespace cryonoise
