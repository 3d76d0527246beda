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

// Regenerates the bundled fixtures: make_fixtures <data_dir>

#include <filesystem>
#include <functional>
#include <iostream>

#include "cryonoise/json_util.hpp"
#include "cryonoise/solr.hpp"
#include "cryonoise/thermal_chain.hpp"
#include "cryonoise/touchstone.hpp"
#include "cryonoise/virtual_cryostat.hpp"
#include "cryonoise/workflow.hpp"

namespace fs = std::filesystem;
using namespace cryonoise;
using nlohmann::json;

namespace {

std::vector<Frequency> grid(double a, double b, std::size_t n) {
  std::vector<Frequency> g;
  for (std::size_t i = 0; i < n; ++i)
    g.emplace_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

void put(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  write_text_file_atomic(p, text);
  std::cout << p.string() << "\n";
}

TwoPortSParams raw_of(const std::vector<Frequency>& g, const ErrorBoxTruth* truth,
                      const std::function<SMatrix(Frequency)>& element) {
  std::vector<SMatrix> data;
  for (Frequency f : g) {
    const SMatrix e = element(f);
    data.push_back(truth ? embed(e, truth->at(f)) : e);
  }
  return TwoPortSParams(g, data);
}

void solr_set(const fs::path& dir, const std::vector<Frequency>& g, const ErrorBoxTruth* truth) {
  const DutModel dut;
  auto reflect = [](Complex r) { return [r](Frequency) { return SMatrix{r, 0.0, 0.0, r}; }; };
  put(dir / "short.s2p", write_touchstone(raw_of(g, truth, reflect(-1.0))));
  put(dir / "open.s2p", write_touchstone(raw_of(g, truth, reflect(1.0))));
  put(dir / "load.s2p", write_touchstone(raw_of(g, truth, reflect(0.0))));
  put(dir / "thru.s2p", write_touchstone(raw_of(g, truth, [](Frequency) { return ideal_thru_matrix(); })));
  put(dir / "dut_raw.s2p", write_touchstone(raw_of(g, truth, [&](Frequency f) { return dut.sparams(f); })));
  put(dir / "dut_true.s2p", write_touchstone(raw_of(g, nullptr, [&](Frequency f) { return dut.sparams(f); })));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data_dir>\n";
    return 2;
  }
  const fs::path dir = argv[1];

  put(dir / "table1_chain.json", to_json(reference_input_line()).dump(2) + "\n");
  put(dir / "suppl_bias.json",
      json{{"suppl",
            {{"gain_db", 20.0}, {"signal_hz", 4e9}, {"pump_hz", 8e9}, {"g_sys_db", 70.9},
             {"t_sys_K", 4.65}, {"t_min_K", 0.02}, {"t_max_K", 2.0}, {"temperatures", 10},
             {"spurs", true}}}}
              .dump(2) + "\n");

  const auto g = grid(4e9, 8e9, 21);
  const ErrorBoxTruth truth;
  solr_set(dir / "solr", g, &truth);
  solr_set(dir / "solr_identity", g, nullptr);

  ProtocolPlan plan;
  plan.freqs = grid(4e9, 8e9, 9);
  for (int k = 0; k < 10; ++k) plan.temperatures.push_back(0.02 + 0.22 * k);

  VirtualCryostatConfig quiet;
  quiet.sparam_sigma = 0.0;
  quiet.psd_noise = false;
  put(dir / "protocol_demo.json", json{{"cryostat", to_json(quiet)}, {"plan", to_json(plan)}}.dump(2) + "\n");

  VirtualCryostatConfig noisy;
  noisy.seed = 7;
  put(dir / "protocol_noisy.json", json{{"cryostat", to_json(noisy)}, {"plan", to_json(plan)}}.dump(2) + "\n");

  VirtualCryostatConfig bad = quiet;
  bad.vts.s22 = Complex(1.0, 0.0);
  put(dir / "protocol_bad_vts.json", json{{"cryostat", to_json(bad)}, {"plan", to_json(plan)}}.dump(2) + "\n");

  VirtualCryostatConfig nonlinear = quiet;
  const double gain = nonlinear.dut.gain();
  nonlinear.dut.modes = {{-1, gain, gain / 100.0}, {1, 10.0, 0.1}, {-2, std::sqrt(gain - 1.0), 0.0995},
                         {2, std::cbrt(gain), std::cbrt(gain) / 100.0}};
  put(dir / "protocol_nonlinear.json",
      json{{"cryostat", to_json(nonlinear)}, {"plan", to_json(plan)}}.dump(2) + "\n");

  const CalibrationReport demo = run_virtual_protocol(quiet, plan);
  PlanckSweep sweep;
  sweep.grid = plan.freqs;
  sweep.records = demo.raw.sweep;
  put(dir / "sweep_demo.csv", write_sweep_csv(sweep));
  put(dir / "vts_demo.s2p", write_touchstone(*demo.vts_sparams));
  return 0;
}
