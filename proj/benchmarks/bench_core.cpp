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

#include <benchmark/benchmark.h>

#include <random>

#include "cryonoise/planck_calibration.hpp"
#include "cryonoise/serial_bias.hpp"
#include "cryonoise/solr.hpp"
#include "cryonoise/thermal_chain.hpp"

using namespace cryonoise;

namespace {

PlanckSweep make_sweep(std::size_t freqs, std::size_t temps) {
  PlanckSweep s;
  for (std::size_t i = 0; i < freqs; ++i) s.grid.emplace_back(4e9 + 4e9 * i / std::max<std::size_t>(freqs - 1, 1));
  const ChainPoint chain{std::pow(10.0, 7.09), 4.65};
  for (std::size_t k = 0; k < temps; ++k) {
    SweepRecord r;
    r.temperature = 0.02 + 1.98 * k / (temps - 1);
    for (Frequency f : s.grid) r.psd.push_back(psd_from_occupation(planck_occupation(f, r.temperature), f, chain));
    s.records.push_back(std::move(r));
  }
  return s;
}

void BM_ReferenceLineCascade(benchmark::State& state) {
  const ChainSpec spec = reference_input_line();
  for (auto _ : state) benchmark::DoNotOptimize(cascade_occupation(spec, Frequency(5e9)));
}
BENCHMARK(BM_ReferenceLineCascade);

void BM_PlanckFit(benchmark::State& state) {
  const PlanckSweep s = make_sweep(static_cast<std::size_t>(state.range(0)), 10);
  for (auto _ : state) benchmark::DoNotOptimize(fit_planck(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PlanckFit)->Arg(1)->Arg(101)->Arg(1001);

void BM_SolrSolveAndCorrect(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  auto c = [&] { return Complex(u(rng), u(rng)); };
  ErrorTerms e;
  e.port1 = {c(), c(), Complex(0.8, 0.1)};
  e.port2 = {c(), c(), Complex(0.7, -0.2)};
  e.transmission_fwd = Complex(0.75, 0.05);
  e.transmission_rev = Complex(0.74, -0.1);
  const SMatrix dut{c(), c(), Complex(3.0, 1.0), c()};
  const SMatrix raw = embed(dut, e);
  for (auto _ : state) {
    const auto p1 = solve_one_port(embed(SMatrix{-1.0, 0.0, 0.0, -1.0}, e).s11,
                                   embed(SMatrix{1.0, 0.0, 0.0, 1.0}, e).s11, e.port1.directivity,
                                   -1.0, 1.0, 0.0);
    benchmark::DoNotOptimize(p1);
    benchmark::DoNotOptimize(deembed(raw, e));
  }
}
BENCHMARK(BM_SolrSolveAndCorrect);

void BM_SerialBias(benchmark::State& state) {
  SupplConfigOptions o;
  o.temperatures = static_cast<std::size_t>(state.range(0));
  const SerialBiasConfig cfg = build_suppl_config(o);
  for (auto _ : state) benchmark::DoNotOptimize(run_bias_analysis(cfg));
}
BENCHMARK(BM_SerialBias)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
