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

#include "cryonoise/error.hpp"
#include "cryonoise/solr.hpp"
#include "cryonoise/touchstone.hpp"
#include "support.hpp"

using namespace cryonoise;
using namespace cryonoise::testing;

namespace {

struct Calibration {
  std::vector<OnePortTerms> port1, port2;
  TwoPortSParams reciprocal;
};

// Measures ideal standards and `standard` through the boxes `truth`.
Calibration measure(const std::vector<Frequency>& grid, const std::vector<ErrorTerms>& truth,
                    const std::vector<SMatrix>& standard) {
  OnePortMeasurement m1, m2;
  m1.freqs = m2.freqs = grid;
  std::vector<SMatrix> recip;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& e = truth[i];
    const SMatrix s = embed(reflect(-1.0), e), o = embed(reflect(1.0), e), l = embed(reflect(0.0), e);
    m1.short_m.push_back(s.s11);
    m1.open_m.push_back(o.s11);
    m1.load_m.push_back(l.s11);
    m2.short_m.push_back(s.s22);
    m2.open_m.push_back(o.s22);
    m2.load_m.push_back(l.s22);
    recip.push_back(embed(standard[i], e));
  }
  return {solve_one_port(m1), solve_one_port(m2), TwoPortSParams(grid, recip)};
}

double term_error(const ErrorTerms& a, const ErrorTerms& b) {
  return std::max({std::abs(a.port1.directivity - b.port1.directivity),
                   std::abs(a.port1.source_match - b.port1.source_match),
                   std::abs(a.port1.reflection_tracking - b.port1.reflection_tracking),
                   std::abs(a.port2.directivity - b.port2.directivity),
                   std::abs(a.port2.source_match - b.port2.source_match),
                   std::abs(a.port2.reflection_tracking - b.port2.reflection_tracking),
                   std::abs(a.transmission_fwd - b.transmission_fwd),
                   std::abs(a.transmission_rev - b.transmission_rev)});
}

}  // namespace

TEST(OnePort, IdentityBoxRecoversIdentity) {
  const auto t = solve_one_port(-1.0, 1.0, 0.0, -1.0, 1.0, 0.0);
  EXPECT_LT(std::abs(t.directivity), 1e-15);
  EXPECT_LT(std::abs(t.source_match), 1e-15);
  EXPECT_LT(std::abs(t.reflection_tracking - 1.0), 1e-15);
}

TEST(OnePort, LoadMeasuresDirectivity) {
  std::mt19937_64 rng(8);
  const auto e = random_error_terms(rng);
  EXPECT_LT(std::abs(embed(reflect(0.0), e).s11 - e.port1.directivity), 1e-15);
}

TEST(OnePort, RecoversRandomBoxes) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto e = random_error_terms(rng);
    const auto t = solve_one_port(embed(reflect(-1.0), e).s11, embed(reflect(1.0), e).s11,
                                  embed(reflect(0.0), e).s11, -1.0, 1.0, 0.0);
    EXPECT_LT(std::abs(t.directivity - e.port1.directivity), 1e-10);
    EXPECT_LT(std::abs(t.source_match - e.port1.source_match), 1e-10);
    EXPECT_LT(std::abs(t.reflection_tracking - e.port1.reflection_tracking), 1e-10);
  }
}

TEST(OnePort, NonIdealStandardModels) {
  std::mt19937_64 rng(10);
  const auto e = random_error_terms(rng);
  const Complex gs(-0.98, 0.05), go(0.97, -0.1), gl(0.02, 0.01);
  auto meas = [&](Complex g) { return embed(reflect(g), e).s11; };
  OnePortMeasurement m{{5_GHz}, {meas(gs)}, {meas(go)}, {meas(gl)}};
  OnePortStandards std_models;
  std_models.short_std.model = OnePortTrace{{5_GHz}, {gs}, 50.0};
  std_models.open_std.model = OnePortTrace{{5_GHz}, {go}, 50.0};
  std_models.load_std.ideal = gl;
  const auto t = solve_one_port(m, std_models).at(0);
  EXPECT_LT(std::abs(t.source_match - e.port1.source_match), 1e-10);
}

TEST(OnePort, DegenerateStandardsAreSingular) {
  EXPECT_THROW(solve_one_port(0.1, 0.1, 0.3, 1.0, 1.0, 0.0), SingularError);
}

TEST(Solr, IdentityBoxesAndThruGiveUnitTracking) {
  const std::vector<Frequency> g{4_GHz, 5_GHz};
  const auto c = measure(g, {ErrorTerms{}, ErrorTerms{}}, {ideal_thru_matrix(), ideal_thru_matrix()});
  const auto eb = solve_solr(c.port1, c.port2, c.reciprocal);
  for (const auto& t : eb.terms) {
    EXPECT_LT(std::abs(t.transmission_fwd - 1.0), 1e-15);
    EXPECT_LT(std::abs(t.transmission_rev - 1.0), 1e-15);
  }
}

TEST(Solr, RecoversRandomBoxesWithReciprocalStandard) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Frequency> g{4_GHz, 6_GHz};
    const std::vector<ErrorTerms> truth{random_error_terms(rng), random_error_terms(rng)};
    const std::vector<SMatrix> recip{random_passive(rng, true), random_passive(rng, true)};
    const auto c = measure(g, truth, recip);
    // Estimate within one radian of the true standard phase.
    const std::vector<double> est{std::arg(recip[0].s21) + jitter(rng), std::arg(recip[1].s21) + jitter(rng)};
    const auto eb = solve_solr(c.port1, c.port2, c.reciprocal, est);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(term_error(eb.terms[i], truth[i]), 1e-10);
  }
}

TEST(Solr, FlippedEstimateFlipsRoot) {
  std::mt19937_64 rng(13);
  const std::vector<Frequency> g{5_GHz};
  const std::vector<ErrorTerms> truth{random_error_terms(rng)};
  const std::vector<SMatrix> recip{random_passive(rng, true)};
  const auto c = measure(g, truth, recip);
  const double phase = std::arg(recip[0].s21);
  const auto a = solve_solr(c.port1, c.port2, c.reciprocal, std::vector<double>{phase});
  const auto b = solve_solr(c.port1, c.port2, c.reciprocal, std::vector<double>{phase + std::numbers::pi});
  EXPECT_LT(std::abs(a.terms[0].transmission_fwd + b.terms[0].transmission_fwd), 1e-12);
  EXPECT_LT(std::abs(a.terms[0].transmission_fwd - truth[0].transmission_fwd), 1e-10);
}

TEST(Solr, LostContinuityWithoutEstimateIsAmbiguous) {
  // A long line sampled coarsely: the standard's phase advances ~100 deg per point.
  std::vector<Frequency> g;
  std::vector<SMatrix> line;
  std::vector<double> phase;
  for (int i = 0; i < 4; ++i) {
    g.emplace_back(4e9 + 0.1e9 * i);
    const double ph = -1.75 * i;
    phase.push_back(ph);
    const Complex t = std::polar(0.9, ph);
    line.push_back({0.0, t, t, 0.0});
  }
  const auto c = measure(g, std::vector<ErrorTerms>(g.size()), line);
  try {
    solve_solr(c.port1, c.port2, c.reciprocal);
    FAIL() << "expected ambiguity";
  } catch (const DiagnosticError& e) {
    EXPECT_NE(std::string(e.what()).find("4100000000"), std::string::npos) << e.what();
  }
  const auto eb = solve_solr(c.port1, c.port2, c.reciprocal, phase);
  for (const auto& t : eb.terms) EXPECT_LT(std::abs(t.transmission_fwd - 1.0), 1e-12);
}

TEST(Solr, ContinuityTracksSlowPhase) {
  std::vector<Frequency> g;
  std::vector<SMatrix> line;
  for (int i = 0; i < 30; ++i) {
    g.emplace_back(4e9 + 0.01e9 * i);
    const Complex t = std::polar(0.95, -0.3 * i);  // wraps past -pi
    line.push_back({0.0, t, t, 0.0});
  }
  std::mt19937_64 rng(14);
  std::vector<ErrorTerms> truth;
  for (std::size_t i = 0; i < g.size(); ++i) truth.push_back(random_error_terms(rng));
  const auto c = measure(g, truth, line);
  const auto eb = solve_solr(c.port1, c.port2, c.reciprocal);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(term_error(eb.terms[i], truth[i]), 1e-10);
}

TEST(Solr, ZeroTransmissionStandardIsSingular) {
  const std::vector<Frequency> g{5_GHz};
  const auto c = measure(g, {ErrorTerms{}}, {reflect(0.0)});
  EXPECT_THROW(solve_solr(c.port1, c.port2, c.reciprocal), SingularError);
}

TEST(Deembed, IdentityBoxesLeaveRawUnchanged) {
  std::mt19937_64 rng(15);
  const SMatrix x = random_passive(rng, false);
  EXPECT_LT(max_entry_error(*deembed(x, ErrorTerms{}), x), 1e-15);
  EXPECT_LT(max_entry_error(embed(x, ErrorTerms{}), x), 1e-15);
}

TEST(Deembed, RoundTripRandomPassive) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 1000; ++i) {
    const auto e = random_error_terms(rng);
    const SMatrix dut = random_passive(rng, false);
    const auto back = deembed(embed(dut, e), e);
    ASSERT_TRUE(back.has_value());
    EXPECT_LT(max_entry_error(*back, dut), 1e-10);
  }
}

TEST(Deembed, AttenuatorThroughKnownBoxes) {
  std::mt19937_64 rng(17);
  const auto e = random_error_terms(rng);
  const SMatrix att{0.0, 0.1, 0.1, 0.0};
  EXPECT_NEAR(std::abs(deembed(embed(att, e), e)->s21), 0.1, 1e-10);
}

TEST(Deembed, PreservesReciprocity) {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 200; ++i) {
    auto e = random_error_terms(rng);
    // Reciprocal boxes: e10 = e01 and e23 = e32 give fwd = rev.
    e.transmission_fwd = std::sqrt(e.port1.reflection_tracking * e.port2.reflection_tracking);
    e.transmission_rev = e.transmission_fwd;
    const auto out = deembed(embed(random_passive(rng, true), e), e);
    EXPECT_LT(std::abs(out->s21 - out->s12), 1e-10);
  }
}

TEST(Deembed, SingularPointIsFlaggedNotFatal) {
  const std::vector<Frequency> g{4_GHz, 5_GHz};
  ErrorTerms bad;
  bad.port1.reflection_tracking = 0.0;
  const ErrorBoxes eb{g, {ErrorTerms{}, bad}};
  const TwoPortSParams raw(g, {ideal_thru_matrix(), ideal_thru_matrix()});
  const auto r = deembed(raw, eb);
  ASSERT_EQ(r.flagged.size(), 1u);
  EXPECT_EQ(r.flagged[0], 1u);
  EXPECT_EQ(r.dut[0], ideal_thru_matrix());
  EXPECT_TRUE(std::isnan(r.dut[1].s11.real()));
}

TEST(ErrorBoxesJson, RoundTrip) {
  std::mt19937_64 rng(19);
  ErrorBoxes eb{{4_GHz, 5_GHz}, {random_error_terms(rng), random_error_terms(rng)}};
  const auto back = error_boxes_from_json(to_json(eb));
  ASSERT_EQ(back.freqs, eb.freqs);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(term_error(back.terms[i], eb.terms[i]), 0.0);
  EXPECT_THROW(error_boxes_from_json(nlohmann::json{{"freq_hz", {1.0}}}), ConfigError);
}

TEST(Fixtures, SolrSetRecoversDut) {
  auto read = [](const char* n) { return read_touchstone_file(data_path(std::string("solr/") + n)); };
  const auto s = read("short.s2p"), o = read("open.s2p"), l = read("load.s2p"), t = read("thru.s2p");
  OnePortMeasurement m1, m2;
  m1.freqs = m2.freqs = s.freqs();
  for (std::size_t i = 0; i < s.size(); ++i) {
    m1.short_m.push_back(s[i].s11);
    m1.open_m.push_back(o[i].s11);
    m1.load_m.push_back(l[i].s11);
    m2.short_m.push_back(s[i].s22);
    m2.open_m.push_back(o[i].s22);
    m2.load_m.push_back(l[i].s22);
  }
  const auto eb = solve_solr(solve_one_port(m1), solve_one_port(m2), t);
  const auto dut = deembed(read("dut_raw.s2p"), eb).dut;
  const auto truth = read("dut_true.s2p");
  for (std::size_t i = 0; i < dut.size(); ++i) EXPECT_LT(max_entry_error(dut[i], truth[i]), 1e-10);
}
