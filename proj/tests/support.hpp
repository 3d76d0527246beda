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

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "cryonoise/solr.hpp"
#include "cryonoise/sparams.hpp"

namespace cryonoise::testing {

inline std::string data_path(const std::string& rel) {
  return std::string(CRYONOISE_TEST_DATA_DIR) + "/" + rel;
}

inline Complex random_complex(std::mt19937_64& rng, double max_abs) {
  std::uniform_real_distribution<double> r(0.0, max_abs), ph(-std::numbers::pi, std::numbers::pi);
  return std::polar(r(rng), ph(rng));
}

/// Random 2x2 whose largest singular value does not exceed limit.
inline SMatrix random_passive(std::mt19937_64& rng, bool reciprocal, double limit = 0.95) {
  SMatrix s{random_complex(rng, 1.0), random_complex(rng, 1.0), random_complex(rng, 1.0),
            random_complex(rng, 1.0)};
  if (reciprocal) s.s12 = s.s21;
  const double n = s.norm();
  std::uniform_real_distribution<double> u(0.2, 1.0);
  const double scale = limit * u(rng) / n;
  return {s.s11 * scale, s.s12 * scale, s.s21 * scale, s.s22 * scale};
}

inline ErrorTerms random_error_terms(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.05, 1.0), ph(-std::numbers::pi, std::numbers::pi);
  ErrorTerms e;
  e.port1 = {random_complex(rng, 0.3), random_complex(rng, 0.3), std::polar(mag(rng), ph(rng))};
  e.port2 = {random_complex(rng, 0.3), random_complex(rng, 0.3), std::polar(mag(rng), ph(rng))};
  // Physical boxes: e10e32 * e23e01 = e10e01 * e23e32.
  const Complex fwd = std::polar(mag(rng), ph(rng));
  e.transmission_fwd = fwd;
  e.transmission_rev = e.port1.reflection_tracking * e.port2.reflection_tracking / fwd;
  return e;
}

inline double max_entry_error(const SMatrix& a, const SMatrix& b) {
  return std::max({std::abs(a.s11 - b.s11), std::abs(a.s12 - b.s12), std::abs(a.s21 - b.s21),
                   std::abs(a.s22 - b.s22)});
}

inline SMatrix reflect(Complex g) { return {g, 0.0, 0.0, g}; }

}  // namespace cryonoise::testing
