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

#include <numbers>

namespace cryonoise::constants {

// CODATA 2018. h, k_B and e are exact in the 2019 SI.
inline constexpr double planck_h = 6.62607015e-34;         // J s
inline constexpr double hbar = planck_h / (2.0 * std::numbers::pi);  // 1.054571817e-34 J s
inline constexpr double boltzmann = 1.380649e-23;          // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C

}  // namespace cryonoise::constants
