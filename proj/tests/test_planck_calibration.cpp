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

#include <cmath>
#include <random>

#include "cryonoise/error.hpp"
#include "cryonoise/planck_calibration.hpp"
#include "cryonoise/thermal_chain.hpp"

using namespace cryonoise;

namespace {

constexpr double kH = 6.62607015e-34;
constexpr double kB = 1.380649e-23;
const double kGsys = std::pow(10.0, 7.09);
constexpr double kTsys = 4.65;

double coth_occupation(double f, double t) {
  if (t == 0.0) return 0.5;
  return 0.5 / std::tanh(kH * f / (2.0 * kB * t));
}

// Forward model written out independently of the library.
double model_psd(double f, double t, double g, double tsys, double s22sq = 0.0, double s21sq = 0.0) {
  return g * (kH * f * ((1.0 - s22sq) * coth_occupation(f, t) + 0.5 * s21sq) + kB * tsys);
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

PlanckSweep synth(const std::vector<double>& freqs, const std::vector<double>& temps, double g = kGsys,
                  double tsys = kTsys) {
  PlanckSweep s;
  for (double f : freqs) s.grid.emplace_back(f);
  for (double t : temps) {
    SweepRecord r{t, {}};
    for (double f : freqs) r.psd.push_back(model_psd(f, t, g, tsys));
    s.records.push_back(r);
  }
  return s;
}

}  // namespace

TEST(PlanckFit, NoiselessRecoveryAtPublishedChain) {
  const auto fit = fit_planck(synth({4e9}, linspace(0.02, 2.0, 10)));
  ASSERT_EQ(fit.points.size(), 1u);
  const auto& p = fit.points[0];
  EXPECT_NEAR(p.gain / kGsys, 1.0, 1e-9);
  EXPECT_NEAR(p.noise_temperature / kTsys, 1.0, 1e-9);
  EXPECT_EQ(p.points, 10u);
  EXPECT_EQ(p.dof, 8u);
  EXPECT_TRUE(fit.ok());
}

TEST(PlanckFit, RecoversAcrossBand) {
  const auto freqs = linspace(3e9, 9e9, 25);
  const auto fit = fit_planck(synth(freqs, linspace(0.02, 2.0, 12), 3e6, 1.7));
  for (const auto& p : fit.points) {
    EXPECT_NEAR(p.gain / 3e6, 1.0, 1e-9);
    EXPECT_NEAR(p.noise_temperature / 1.7, 1.0, 1e-9);
    EXPECT_LT(p.sigma_gain, 1e-6 * p.gain);
  }
}

TEST(PlanckFit, EqualTemperaturesAreUnderdetermined) {
  try {
    fit_planck(synth({4e9}, {0.5, 0.5, 0.5}));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("underdetermined"), std::string::npos);
  }
  EXPECT_THROW(fit_planck(synth({4e9}, {0.5})), DomainError);
}

TEST(PlanckFit, NonIdealSourceRecovery) {
  const auto freqs = linspace(4e9, 8e9, 5);
  PlanckSweep s;
  std::vector<SMatrix> sp;
  for (double f : freqs) {
    s.grid.emplace_back(f);
    const double x = (f - 4e9) / 4e9;
    sp.push_back({Complex(0.1, 0.05), 0.0, Complex(0.2 + 0.1 * x, -0.05), Complex(0.15 * x, 0.2)});
  }
  for (double t : linspace(0.03, 1.5, 8)) {
    SweepRecord r{t, {}};
    for (std::size_t j = 0; j < freqs.size(); ++j)
      r.psd.push_back(model_psd(freqs[j], t, kGsys, kTsys, std::norm(sp[j].s22), std::norm(sp[j].s21)));
    s.records.push_back(r);
  }
  s.source = NoiseSourceModel{TwoPortSParams(s.grid, sp), SourceKind::thermal, 2};
  for (const auto& p : fit_planck(s).points) {
    EXPECT_NEAR(p.gain / kGsys, 1.0, 1e-9);
    EXPECT_NEAR(p.noise_temperature / kTsys, 1.0, 1e-9);
  }
  // Ignoring the source mismatch biases the fit.
  s.source.reset();
  EXPECT_GT(std::abs(fit_planck(s).points[4].gain / kGsys - 1.0), 1e-3);
}

TEST(PlanckFit, SourceModelMustCoverGrid) {
  auto s = synth({4e9, 9e9}, {0.1, 1.0});
  const std::vector<Frequency> g{Frequency(4e9), Frequency(8e9)};
  s.source = NoiseSourceModel{TwoPortSParams(g, {SMatrix{}, SMatrix{}}), SourceKind::thermal, 2};
  EXPECT_THROW(fit_planck(s), RangeError);
}

TEST(PlanckFit, TwoTemperaturesEqualYFactor) {
  const auto s = synth({5e9}, {0.05, 1.2});
  const auto p = fit_planck(s).points[0];
  EXPECT_EQ(p.dof, 0u);
  EXPECT_EQ(p.sigma_gain, 0.0);
  EXPECT_EQ(p.sigma_noise_temperature, 0.0);
  const auto y = y_factor({1.2, s.records[1].psd[0]}, {0.05, s.records[0].psd[0]}, Frequency(5e9));
  EXPECT_NEAR(p.gain / y.gain, 1.0, 1e-12);
  EXPECT_NEAR(p.noise_temperature / y.noise_temperature, 1.0, 1e-12);
}

TEST(YFactor, ExactRecoveryAndDomain) {
  const double f = 6e9;
  const auto y = y_factor({2.0, model_psd(f, 2.0, 1e5, 3.3)}, {0.1, model_psd(f, 0.1, 1e5, 3.3)}, Frequency(f));
  EXPECT_NEAR(y.gain / 1e5, 1.0, 1e-12);
  EXPECT_NEAR(y.noise_temperature / 3.3, 1.0, 1e-12);
  EXPECT_THROW(y_factor({1.0, 1.0}, {1.0, 0.5}, Frequency(f)), DomainError);
  EXPECT_THROW(y_factor({0.5, 1.0}, {1.0, 0.5}, Frequency(f)), DomainError);
}

TEST(YFactor, AnyPairOfNoiselessSweepMatchesFit) {
  const auto temps = linspace(0.02, 2.0, 10);
  const auto s = synth({4.5e9}, temps);
  const auto p = fit_planck(s).points[0];
  for (std::size_t a = 0; a < temps.size(); ++a)
    for (std::size_t b = a + 1; b < temps.size(); ++b) {
      const auto y = y_factor({temps[b], s.records[b].psd[0]}, {temps[a], s.records[a].psd[0]},
                              Frequency(4.5e9));
      EXPECT_NEAR(y.gain / p.gain, 1.0, 1e-9);
      EXPECT_NEAR(y.noise_temperature / p.noise_temperature, 1.0, 1e-9);
    }
}

TEST(PlanckFit, GaugeInvariance) {
  const auto temps = linspace(0.02, 2.0, 10);
  const auto base = fit_planck(synth({4e9, 7e9}, temps)).points;
  for (double c : {1e-3, 7.0, 1e4}) {
    const auto scaled = fit_planck(synth({4e9, 7e9}, temps, kGsys * c)).points;
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_NEAR(scaled[j].noise_temperature / base[j].noise_temperature, 1.0, 1e-9);
      EXPECT_NEAR(scaled[j].gain / (c * base[j].gain), 1.0, 1e-9);
    }
  }
}

TEST(PlanckFit, NegativeNoiseTemperatureIsReportedNotClamped) {
  auto s = synth({4e9}, linspace(0.02, 2.0, 6), 1e6, 0.0);
  for (auto& r : s.records) r.psd[0] -= 1e6 * kB * 0.05;
  const auto p = fit_planck(s).points[0];
  EXPECT_TRUE(p.negative_noise_temperature);
  EXPECT_NEAR(p.noise_temperature, -0.05, 1e-9);
}

TEST(PlanckFit, FallingPsdFlagsNonpositiveGain) {
  auto s = synth({4e9}, linspace(0.02, 2.0, 6));
  std::reverse(s.records.begin(), s.records.end());
  for (std::size_t k = 0; k < s.records.size(); ++k) s.records[k].temperature = 0.02 + 0.396 * k;
  const auto fit = fit_planck(s);
  EXPECT_TRUE(fit.points[0].nonpositive_gain);
  EXPECT_FALSE(fit.ok());
}

TEST(PlanckFit, VarianceWeightsKeepExactness) {
  auto s = synth({4e9, 5e9}, linspace(0.02, 2.0, 7));
  for (std::size_t k = 0; k < 7; ++k) s.variances.push_back({1.0 + k, 3.0 / (1.0 + k)});
  for (const auto& p : fit_planck(s).points) EXPECT_NEAR(p.noise_temperature / kTsys, 1.0, 1e-9);
  s.variances.pop_back();
  EXPECT_THROW(fit_planck(s), DomainError);
}

TEST(PlanckFit, InvalidSweeps) {
  auto s = synth({4e9, 5e9}, {0.1, 1.0});
  auto bad = s;
  bad.records[0].psd[1] = -1.0;
  EXPECT_THROW(fit_planck(bad), DomainError);
  bad = s;
  bad.records[1].psd.pop_back();
  EXPECT_THROW(fit_planck(bad), DomainError);
  bad = s;
  std::swap(bad.grid[0], bad.grid[1]);
  EXPECT_THROW(fit_planck(bad), DomainError);
}

TEST(PlanckFit, MonteCarloCoverage) {
  // 0.1 % additive Gaussian noise, 1000 trials, joint 3-sigma coverage.
  const auto temps = linspace(0.02, 2.0, 101);
  const auto clean = synth({4e9}, temps);
  double mean = 0.0;
  for (const auto& r : clean.records) mean += r.psd[0] / temps.size();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 1e-3 * mean);
  int inside = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = clean;
    for (auto& r : s.records) r.psd[0] += noise(rng);
    const auto p = fit_planck(s).points[0];
    inside += std::abs(p.gain - kGsys) <= 3 * p.sigma_gain &&
              std::abs(p.noise_temperature - kTsys) <= 3 * p.sigma_noise_temperature;
  }
  EXPECT_GE(inside, 990);
}

TEST(PlanckFit, ReportedSigmaMatchesScatter) {
  const auto temps = linspace(0.02, 2.0, 30);
  const auto clean = synth({4e9}, temps);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1e-3 * clean.records.back().psd[0]);
  double sum = 0, sum2 = 0, sigma = 0;
  const int n = 2000;
  for (int trial = 0; trial < n; ++trial) {
    auto s = clean;
    for (auto& r : s.records) r.psd[0] += noise(rng);
    const auto p = fit_planck(s).points[0];
    sum += p.noise_temperature;
    sum2 += p.noise_temperature * p.noise_temperature;
    sigma += p.sigma_noise_temperature / n;
  }
  const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sd / sigma, 1.0, 0.1);
}

TEST(PlanckFit, ThreadCountDoesNotChangeResult) {
  const auto s = synth(linspace(3e9, 9e9, 64), linspace(0.02, 2.0, 10));
  EXPECT_EQ(to_json(fit_planck(s, {1})).dump(), to_json(fit_planck(s, {4})).dump());
  EXPECT_EQ(to_json(fit_planck(s, {1})).dump(), to_json(fit_planck(s, {64})).dump());
}

TEST(PlanckFit, JsonRoundTrip) {
  auto s = synth({4e9, 5e9}, linspace(0.02, 2.0, 5));
  s.records[2].psd[0] *= 1.001;
  const auto fit = fit_planck(s);
  const auto back = planck_fit_from_json(to_json(fit));
  ASSERT_EQ(back.points.size(), 2u);
  EXPECT_EQ(to_json(back).dump(), to_json(fit).dump());
}

TEST(SweepCsv, RoundTripIsExact) {
  const auto s = synth({4e9, 4.5e9, 5e9}, {0.02, 0.3, 1.1});
  const auto back = parse_sweep_csv(write_sweep_csv(s));
  EXPECT_EQ(back.grid, s.grid);
  ASSERT_EQ(back.records.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.records[k].temperature, s.records[k].temperature);
    EXPECT_EQ(back.records[k].psd, s.records[k].psd);
  }
}

TEST(SweepCsv, ColumnsInAnyOrderWithComments) {
  const auto s = parse_sweep_csv(
      "# bench run\npsd_W_per_Hz,freq_hz,T_vts_K\n1e-17,4e9,0.1\n2e-17,5e9,0.1\n\n"
      "# hot\n3e-17,4e9,1\n4e-17,5e9,1\n");
  ASSERT_EQ(s.records.size(), 2u);
  EXPECT_EQ(s.grid[1], Frequency(5e9));
  EXPECT_EQ(s.records[1].psd[0], 3e-17);
}

TEST(SweepCsv, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_sweep_csv(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("freq_hz,psd_W_per_Hz\n4e9,1e-17\n"), 1u);
  EXPECT_EQ(line_of("freq_hz,T_vts_K,psd_W_per_Hz\n4e9,0.1,1e-17\n5e9,0.1\n"), 3u);
  EXPECT_EQ(line_of("freq_hz,T_vts_K,psd_W_per_Hz\n4e9,0.1,abc\n"), 2u);
  EXPECT_EQ(line_of("freq_hz,T_vts_K,psd_W_per_Hz\n4e9,0.1,nan\n"), 2u);
  EXPECT_EQ(line_of("freq_hz,T_vts_K,psd_W_per_Hz\n4e9,-0.1,1e-17\n"), 2u);
  EXPECT_EQ(line_of("freq_hz,T_vts_K,psd_W_per_Hz\n4e9,0.1,1e-17\n5e9,0.1,1e-17\n4e9,1,1e-17\n"
                    "6e9,1,1e-17\n"),
            4u);
  EXPECT_EQ(line_of(""), 1u);
  try {
    parse_sweep_csv("freq_hz,psd_W_per_Hz\n");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("T_vts_K"), std::string::npos);
  }
}

TEST(Substitution, UnitTransmissionIsIdentity) {
  const auto fit = fit_planck(synth({4e9, 6e9}, linspace(0.02, 2.0, 6)));
  const auto bare = extract_substitution(fit, 1.0);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_DOUBLE_EQ(bare.gain[j], fit.points[j].gain);
    EXPECT_NEAR(bare.noise_temperature[j], fit.points[j].noise_temperature, 1e-15);
  }
}

TEST(Substitution, HalfTransmissionRoundTrip) {
  // Chain seen through A_s: G~ = G A_s, k T~ / hf = (1 - A_s)/2A_s + k T_sys / hf A_s.
  const double a = 0.5, f = 5e9, g = 2e6, t = 3.1;
  const double t_eff = (kH * f / kB) * ((1 - a) / (2 * a) + kB * t / (kH * f * a));
  const auto fit = fit_planck(synth({f}, linspace(0.02, 2.0, 8), g * a, t_eff));
  const auto bare = extract_substitution(fit, a);
  EXPECT_NEAR(bare.gain[0] / g, 1.0, 1e-9);
  EXPECT_NEAR(bare.noise_temperature[0] / t, 1.0, 1e-9);
  EXPECT_THROW(extract_substitution(fit, 0.0), DomainError);
  EXPECT_THROW(extract_substitution(fit, 1.1), DomainError);
  EXPECT_THROW(extract_substitution(fit, std::vector<double>{0.5, 0.5}), DomainError);
}

namespace {

ReadoutChainParams flat_chain(std::vector<double> freqs, double g, double t, double sg = 0, double st = 0) {
  ReadoutChainParams c;
  for (double f : freqs) {
    c.freqs.emplace_back(f);
    c.gain.push_back(g);
    c.noise_temperature.push_back(t);
    c.sigma_gain.push_back(sg);
    c.sigma_noise_temperature.push_back(st);
  }
  return c;
}

double psd_for(double n_out, double f, const ReadoutChainParams& c) {
  return c.gain[0] * (kH * f * n_out + kB * c.noise_temperature[0]);
}

}  // namespace

TEST(AddedNoise, QuantumLimitedConstruction) {
  const auto chain = flat_chain({5e9}, kGsys, kTsys);
  const double g = 100.0;
  const auto r = extract_added_noise({{psd_for(g * (0.5 + 0.5), 5e9, chain)}, {g}, {}, {}, {}}, chain);
  EXPECT_NEAR(r.points[0].n_add, 0.5, 1e-9);
  EXPECT_NEAR(r.points[0].quantum_limit, 0.495, 1e-15);
  EXPECT_FALSE(r.points[0].negative_output);
}

TEST(AddedNoise, InjectedValueAndInputShift) {
  const auto chain = flat_chain({4e9, 6e9}, 1e7, 2.0);
  const double g = 20.0;
  AddedNoiseInputs in{{psd_for(g * 2.5, 4e9, chain), psd_for(g * 2.5, 6e9, chain)}, {g, g}, {}, {}, {}};
  const auto vac = extract_added_noise(in, chain);
  EXPECT_NEAR(vac.points[0].n_add, 2.0, 1e-9);
  EXPECT_NEAR(vac.points[1].n_add, 2.0, 1e-9);
  in.n_in = {0.56, 0.56};
  const auto warm = extract_added_noise(in, chain);
  EXPECT_NEAR(warm.points[0].n_add - vac.points[0].n_add, -0.06, 1e-12);
}

TEST(AddedNoise, LinearInPsdAndAffineInInput) {
  const auto chain = flat_chain({5e9}, 1e6, 1.0);
  auto n_add = [&](double psd, double n_in) {
    return extract_added_noise({{psd}, {10.0}, {n_in}, {}, {}}, chain).points[0].n_add;
  };
  const double p1 = 3e-17, p2 = 5e-17;
  EXPECT_NEAR(n_add(p1 + p2, 0.5) - n_add(p1, 0.5) - n_add(p2, 0.5),
              -n_add(0.0, 0.5), 1e-9);
  EXPECT_NEAR(n_add(p1, 0.7) - n_add(p1, 0.5), -0.2, 1e-12);
}

TEST(AddedNoise, PhysicalConstructionsRespectQuantumLimit) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> gain(1.0, 1e3), exc(0.0, 2.0), temp(0.0, 0.2);
  const auto chain = flat_chain({5e9}, kGsys, kTsys);
  for (int i = 0; i < 500; ++i) {
    const double g = gain(rng);
    const double n_in = coth_occupation(5e9, temp(rng));
    const double n_out = g * (n_in + std::abs(g - 1) / (2 * g) + exc(rng));
    const auto p = extract_added_noise({{psd_for(n_out, 5e9, chain)}, {g}, {n_in}, {}, {}}, chain).points[0];
    EXPECT_GE(p.n_add, p.quantum_limit - 1e-9);
  }
}

TEST(AddedNoise, NegativeOutputIsFlagged) {
  const auto chain = flat_chain({5e9}, 1e6, 3.0);
  const auto p = extract_added_noise({{0.5 * 1e6 * kB * 3.0}, {10.0}, {}, {}, {}}, chain).points[0];
  EXPECT_TRUE(p.negative_output);
  EXPECT_LT(p.n_out, 0.0);
}

TEST(AddedNoise, LinearizedSigmaMatchesMonteCarlo) {
  const double f = 5e9, g = 50.0, gs = kGsys, ts = kTsys;
  const auto chain = flat_chain({f}, gs, ts, 1e-3 * gs, 1e-3 * ts);
  const double psd = psd_for(g * 1.7, f, chain);
  const auto p = extract_added_noise({{psd}, {g}, {}, {}, {}}, chain).points[0];
  std::mt19937_64 rng(41);
  std::normal_distribution<double> dg(gs, 1e-3 * gs), dt(ts, 1e-3 * ts);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = extract_added_noise({{psd}, {g}, {}, {}, {}}, flat_chain({f}, dg(rng), dt(rng)))
                         .points[0]
                         .n_add;
    s += v;
    s2 += v * v;
  }
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  EXPECT_NEAR(sd / p.sigma_n_add, 1.0, 0.1);
}

TEST(AddedNoise, PsdAndGainUncertaintyDerivatives) {
  const double f = 5e9;
  const auto chain = flat_chain({f}, 1e6, 1.0);
  const double psd = psd_for(40.0, f, chain), g = 20.0;
  auto value = [&](double p, double gg) {
    return extract_added_noise({{p}, {gg}, {}, {}, {}}, chain).points[0].n_add;
  };
  const double h_p = 1e-6 * psd, h_g = 1e-6 * g;
  const double d_p = (value(psd + h_p, g) - value(psd - h_p, g)) / (2 * h_p);
  const double d_g = (value(psd, g + h_g) - value(psd, g - h_g)) / (2 * h_g);
  const double sp = 0.01 * psd, sg = 0.02 * g;
  const auto p = extract_added_noise({{psd}, {g}, {}, {sp}, {sg}}, chain).points[0];
  EXPECT_NEAR(p.sigma_n_add, std::hypot(d_p * sp, d_g * sg), 1e-6 * p.sigma_n_add);
}

TEST(AddedNoise, InputValidation) {
  const auto chain = flat_chain({5e9}, 1e6, 1.0);
  EXPECT_THROW(extract_added_noise({{1e-17}, {0.0}, {}, {}, {}}, chain), DomainError);
  EXPECT_THROW(extract_added_noise({{1e-17, 1e-17}, {1.0}, {}, {}, {}}, chain), DomainError);
  EXPECT_THROW(extract_added_noise({{1e-17}, {1.0}, {0.5, 0.5}, {}, {}}, chain), DomainError);
}

TEST(AddedNoise, BandAverageIsArithmeticMean) {
  const auto chain = flat_chain({3e9, 4e9, 5e9, 6e9}, 1e6, 1.0);
  AddedNoiseInputs in{{}, {10, 10, 10, 10}, {}, {}, {}};
  const double n_out[] = {10, 20, 30, 40};
  for (int i = 0; i < 4; ++i)
    in.psd.push_back(1e6 * (kH * chain.freqs[i].hz() * n_out[i] + kB * 1.0));
  const auto r = extract_added_noise(in, chain);
  EXPECT_NEAR(r.band_average(Frequency(3.6e9), Frequency(5.5e9)), (2.0 + 3.0) / 2 - 0.5, 1e-9);
  EXPECT_NEAR(r.band_average(Frequency(3e9), Frequency(6e9)), 2.5 - 0.5, 1e-9);
  EXPECT_THROW(r.band_average(Frequency(4.1e9), Frequency(4.9e9)), RangeError);
}

TEST(ResultsCsv, HeaderAndBlankNoiseColumns) {
  const auto fit = fit_planck(synth({4e9}, {0.1, 1.0}));
  const auto csv = results_csv(fit);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "freq_hz,gsys_linear,gsys_db,tsys_K,sigma_gsys,sigma_tsys,n_out,n_add,sigma_n_add,"
            "quantum_limit");
  EXPECT_NE(csv.find(",,,,\n"), std::string::npos) << csv;
}
