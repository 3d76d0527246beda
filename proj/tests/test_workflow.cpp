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

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"
#include "cryonoise/virtual_cryostat.hpp"
#include "cryonoise/workflow.hpp"
#include "support.hpp"

using namespace cryonoise;

namespace {

ProtocolPlan demo_plan() {
  ProtocolPlan p;
  for (int i = 0; i < 9; ++i) p.freqs.emplace_back(4e9 + 0.5e9 * i);
  for (int k = 0; k < 10; ++k) p.temperatures.push_back(0.02 + 0.22 * k);
  return p;
}

VirtualCryostatConfig noiseless() {
  VirtualCryostatConfig c;
  c.sparam_sigma = 0.0;
  c.psd_noise = false;
  return c;
}

std::vector<DutMode> nonlinear_modes(double g) {
  return {{-1, g, g / 100}, {1, 10.0, 0.1}, {-2, std::sqrt(g - 1), 0.0995}, {2, std::cbrt(g), std::cbrt(g) / 100}};
}

}  // namespace

TEST(VirtualCryostat, TrueAddedNoiseOfLinearDut) {
  DutModel d;
  d.n_excess = 1.0;
  EXPECT_NEAR(d.true_added_noise(5_GHz), 1.0, 1e-12);
  d.modes = nonlinear_modes(d.gain());
  EXPECT_GT(d.true_added_noise(5_GHz), 1.0);
}

TEST(VirtualCryostat, SettlingLandsInsideTolerance) {
  VirtualCryostat v(noiseless());
  v.set_setpoint(1.0);
  EXPECT_TRUE(v.wait_stable(1e-3, 3600.0));
  EXPECT_NEAR(v.read_temperature(), 1.0, 1e-3);
  v.set_setpoint(2.0);
  EXPECT_FALSE(v.wait_stable(1e-3, 1.0));
}

TEST(VirtualCryostat, SameSeedSameData) {
  auto cfg = VirtualCryostatConfig{};
  VirtualCryostat a(cfg), b(cfg);
  const std::vector<Frequency> g{4_GHz, 5_GHz};
  EXPECT_EQ(a.measure_sparams(g).data(), b.measure_sparams(g).data());
  EXPECT_EQ(a.measure_psd(g, 1e4, 100), b.measure_psd(g, 1e4, 100));
  cfg.seed = 2;
  VirtualCryostat c(cfg);
  EXPECT_NE(a.measure_psd(g, 1e4, 100), c.measure_psd(g, 1e4, 100));
}

TEST(VirtualCryostat, ConfigJsonRoundTrip) {
  auto cfg = VirtualCryostatConfig{};
  cfg.dut.modes = nonlinear_modes(100.0);
  cfg.seed = 99;
  const auto back = cryostat_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back).dump(), to_json(cfg).dump());
  auto j = to_json(cfg);
  j["dut"]["gain"] = 3;
  EXPECT_THROW(cryostat_config_from_json(j), ConfigError);
}

TEST(Protocol, ClosedLoopRecoversAddedNoise) {
  const auto r = run_virtual_protocol(noiseless(), demo_plan());
  ASSERT_EQ(r.completed_step, 8);
  ASSERT_TRUE(r.added_noise);
  for (const auto& p : r.added_noise->points) EXPECT_NEAR(p.n_add, 1.0, 1e-6) << p.freq.hz();
  for (const auto& p : r.planck_fit->points) {
    EXPECT_NEAR(p.gain / std::pow(10.0, 7.09), 1.0, 1e-9);
    EXPECT_NEAR(p.noise_temperature, 4.65, 1e-8);
  }
}

TEST(Protocol, ClosedLoopWithSlopedChainAndWarmInput) {
  auto cfg = noiseless();
  cfg.chain.gain_slope_db_per_ghz = -0.7;
  cfg.chain.t_sys_slope_k_per_ghz = 0.3;
  cfg.dut.n_excess = 0.25;
  cfg.input_occupation = 0.56;
  // Warm input would leak through the VTS into the calibration; isolate it.
  cfg.vts.attenuation_db = 80.0;
  auto plan = demo_plan();
  plan.n_in = 0.56;
  const auto r = run_virtual_protocol(cfg, plan);
  for (const auto& p : r.added_noise->points) EXPECT_NEAR(p.n_add, 0.25, 1e-6);
}

TEST(Protocol, DutCorrectionRecoversTruth) {
  const auto cfg = noiseless();
  const auto r = run_virtual_protocol(cfg, demo_plan());
  for (std::size_t i = 0; i < r.dut_sparams->size(); ++i)
    EXPECT_LT(cryonoise::testing::max_entry_error((*r.dut_sparams)[i], cfg.dut.sparams(r.dut_sparams->freqs()[i])),
              1e-10);
}

TEST(Protocol, CalibrationIsSeparableFromDut) {
  auto a = VirtualCryostatConfig{};
  auto b = a;
  b.dut.modes = nonlinear_modes(b.dut.gain());
  b.dut.n_excess = 3.0;
  b.dut.gain_db = 25.0;
  const auto ra = to_json(run_virtual_protocol(a, demo_plan()));
  const auto rb = to_json(run_virtual_protocol(b, demo_plan()));
  EXPECT_EQ(ra["results"]["planck_fit"].dump(), rb["results"]["planck_fit"].dump());
  EXPECT_EQ(ra["results"]["vts_sparams"].dump(), rb["results"]["vts_sparams"].dump());
  EXPECT_NE(ra["results"]["added_noise"].dump(), rb["results"]["added_noise"].dump());
}

TEST(Protocol, BadSourceAbortsAtQualification) {
  auto cfg = noiseless();
  cfg.vts.s22 = Complex(1.0, 0.0);
  RunLog log;
  try {
    run_virtual_protocol(cfg, demo_plan(), &log);
    FAIL() << "expected abort";
  } catch (const ProtocolAborted& e) {
    EXPECT_EQ(e.step(), 5);
    const std::string what = e.what();
    EXPECT_NE(what.find("|S21|^2 <= 0.1 (1 - |S22|^2)"), std::string::npos) << what;
    EXPECT_NE(what.find("9 of 9"), std::string::npos) << what;
    EXPECT_EQ(e.report().completed_step, 4);
    EXPECT_FALSE(e.report().planck_fit);
    EXPECT_TRUE(e.report().qualification);
  }
  for (const auto& ev : log.snapshot()) EXPECT_LE(ev.step, 5);
}

TEST(Protocol, SettleTimeoutAbortsAtSweep) {
  auto plan = demo_plan();
  plan.settle_timeout_s = 0.5;
  try {
    run_virtual_protocol(noiseless(), plan);
    FAIL();
  } catch (const ProtocolAborted& e) {
    EXPECT_EQ(e.step(), 6);
    EXPECT_EQ(e.report().completed_step, 5);
  }
}

TEST(Protocol, InvalidPlanIsRejected) {
  auto plan = demo_plan();
  plan.temperatures = {0.1};
  EXPECT_THROW(run_virtual_protocol(noiseless(), plan), ConfigError);
  plan = demo_plan();
  plan.freqs.clear();
  EXPECT_THROW(run_virtual_protocol(noiseless(), plan), ConfigError);
}

TEST(Protocol, LogRecordsEachCallOnceInStepOrder) {
  RunLog log;
  const auto plan = demo_plan();
  run_virtual_protocol(noiseless(), plan, &log);
  const auto events = log.snapshot();
  int psd_in_sweep = 0, setpoints = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].seq, i);
    if (i > 0) {
      EXPECT_GE(events[i].step, events[i - 1].step);
      EXPECT_GE(events[i].time_s, events[i - 1].time_s);
    }
    if (events[i].step == 6 && events[i].action == "measure_psd") ++psd_in_sweep;
    if (events[i].action == "set_setpoint") ++setpoints;
  }
  EXPECT_EQ(psd_in_sweep, 10);
  EXPECT_EQ(setpoints, 10);
  EXPECT_EQ(events.front().step, 2);
  EXPECT_EQ(events.back().step, 7);
  const auto jsonl = log.to_jsonl();
  EXPECT_EQ(static_cast<std::size_t>(std::count(jsonl.begin(), jsonl.end(), '\n')), events.size());
}

TEST(Protocol, LogCanBeReadWhileRunning) {
  RunLog log;
  std::atomic<bool> done{false};
  std::size_t max_seen = 0;
  bool ordered = true;
  std::thread reader([&] {
    while (!done.load()) {
      const auto snap = log.snapshot();
      for (std::size_t i = 0; i < snap.size(); ++i) ordered = ordered && snap[i].seq == i;
      max_seen = std::max(max_seen, snap.size());
    }
  });
  for (int i = 0; i < 5; ++i) run_virtual_protocol(VirtualCryostatConfig{}, demo_plan(), &log);
  done = true;
  reader.join();
  EXPECT_TRUE(ordered);
  EXPECT_LE(max_seen, log.size());
}

TEST(Protocol, ThreadsDoNotChangeReport) {
  auto plan = demo_plan();
  const auto one = to_json(run_virtual_protocol(VirtualCryostatConfig{}, plan));
  plan.threads = 4;
  auto four = to_json(run_virtual_protocol(VirtualCryostatConfig{}, plan));
  four["plan"]["threads"] = 1;
  four["config_hash"] = one["config_hash"];
  EXPECT_EQ(one.dump(), four.dump());
}

TEST(Protocol, NoisyRunsCoverTruth) {
  int inside = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    VirtualCryostatConfig cfg;
    cfg.seed = seed;
    const auto r = run_virtual_protocol(cfg, demo_plan());
    for (const auto& p : r.added_noise->points) {
      ++total;
      inside += std::abs(p.n_add - 1.0) <= 3.0 * p.sigma_n_add;
    }
  }
  EXPECT_GE(inside, 0.95 * total) << inside << " of " << total;
}

TEST(Report, ReplayIsIdentical) {
  RunLog log;
  const auto r = run_virtual_protocol(VirtualCryostatConfig{}, demo_plan(), &log);
  const auto j = to_json(r);
  const auto rep = replay(nlohmann::json::parse(j.dump()));
  EXPECT_TRUE(rep.ok());
  EXPECT_TRUE(rep.mismatches.empty());
  EXPECT_EQ(rep.recomputed.dump(), j.dump());
  EXPECT_EQ(to_json(report_from_json(j)).dump(), j.dump());
}

TEST(Report, TamperedRawIsDetected) {
  auto j = to_json(run_virtual_protocol(VirtualCryostatConfig{}, demo_plan()));
  auto& sweep = j["raw"]["sweep"];
  ASSERT_TRUE(sweep.is_array());
  sweep[3]["psd"][2] = sweep[3]["psd"][2].get<double>() * 1.01;
  const auto rep = replay(j);
  EXPECT_FALSE(rep.checksum_ok);
  EXPECT_FALSE(rep.results_match);
  EXPECT_FALSE(rep.ok());
}

TEST(Report, TamperedResultIsDetected) {
  auto j = to_json(run_virtual_protocol(VirtualCryostatConfig{}, demo_plan()));
  j["results"]["added_noise"]["points"][0]["n_add"] = 0.0;
  const auto rep = replay(j);
  EXPECT_TRUE(rep.checksum_ok);
  EXPECT_FALSE(rep.results_match);
  ASSERT_FALSE(rep.mismatches.empty());
  EXPECT_NE(rep.mismatches[0].find("added_noise"), std::string::npos);
}

TEST(Report, EmptyOrForeignReportIsConfigError) {
  EXPECT_THROW(replay(nlohmann::json::object()), ConfigError);
  EXPECT_THROW(replay(nlohmann::json{{"format", "other/1"}}), ConfigError);
  EXPECT_THROW(report_from_json(nlohmann::json::array()), ConfigError);
}

TEST(Report, PartialReportReplays) {
  auto cfg = noiseless();
  cfg.vts.s22 = Complex(1.0, 0.0);
  try {
    run_virtual_protocol(cfg, demo_plan());
    FAIL();
  } catch (const ProtocolAborted& e) {
    const auto j = to_json(e.report());
    EXPECT_EQ(j["completed_step"], 4);
    EXPECT_FALSE(j["abort_reason"].get<std::string>().empty());
    EXPECT_TRUE(replay(j).ok());
  }
}

TEST(Report, ConfigHashTracksInputs) {
  auto cfg = VirtualCryostatConfig{};
  const auto plan = demo_plan();
  const auto h = config_hash(cfg, plan);
  EXPECT_EQ(h, config_hash(cfg, plan));
  cfg.seed = 5;
  EXPECT_NE(h, config_hash(cfg, plan));
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
}

TEST(Plan, JsonRoundTripAndGridForm) {
  auto plan = demo_plan();
  plan.phase_estimate = std::vector<double>(9, 0.1);
  const auto back = plan_from_json(to_json(plan));
  EXPECT_EQ(to_json(back).dump(), to_json(plan).dump());
  const auto g = plan_from_json(nlohmann::json{{"freq_grid", {{"start_hz", 4e9}, {"stop_hz", 8e9}, {"points", 9}}},
                                               {"temperatures_K", plan.temperatures}});
  EXPECT_EQ(g.freqs, plan.freqs);
  EXPECT_THROW(plan_from_json(nlohmann::json{{"temperatures_K", {0.1, 0.2}}, {"bogus", 1}}), ConfigError);
}

TEST(SerialContrast, NonlinearDutBiasesSerialCalibration) {
  auto cfg = noiseless();
  cfg.dut.modes = nonlinear_modes(cfg.dut.gain());
  const auto c = serial_contrast(cfg, demo_plan(), 0);
  EXPECT_NEAR(c.n_add_substitution, c.n_add_true, 1e-6);
  EXPECT_GT(c.beta, 0.0);
  EXPECT_LT(c.serial_noise_error, 0.0);
  EXPECT_LT(c.n_add_serial, c.n_add_substitution);
}

TEST(SerialContrast, IdealIdlerDutAgrees) {
  // Only the idler couples, with the weight the two-mode analysis assumes.
  auto cfg = noiseless();
  cfg.dut.modes = {{-1, cfg.dut.gain(), 0.0}};
  const auto c = serial_contrast(cfg, demo_plan(), 2);
  EXPECT_NEAR(c.n_add_serial, c.n_add_true, 1e-6);
  EXPECT_NEAR(c.beta, 0.0, 1e-12);
}

TEST(Fixtures, BundledProtocolConfigsRun) {
  const auto j = nlohmann::json::parse(read_text_file(cryonoise::testing::data_path("protocol_demo.json")));
  const auto r = run_virtual_protocol(cryostat_config_from_json(j["cryostat"]), plan_from_json(j["plan"]));
  EXPECT_EQ(r.completed_step, 8);
  for (const auto& p : r.added_noise->points) EXPECT_NEAR(p.n_add, 1.0, 1e-6);
}
