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

#include <filesystem>
#include <string>
#include <string_view>

#include "cryonoise/sparams.hpp"

namespace cryonoise {

enum class FrequencyUnit { hz, khz, mhz, ghz };
enum class DataFormat { ri, ma, db };

struct TouchstoneOptions {
  FrequencyUnit unit = FrequencyUnit::hz;
  DataFormat format = DataFormat::ri;
};

// Touchstone v1 only. Option line: `# <unit> S <RI|MA|DB> R <z0>`, tokens in
// any order and any case; a file without one uses the v1 defaults
// (GHz, S, MA, R 50). Two-port rows carry S11 S21 S12 S22. Version 2
// keywords ("[Version]" etc.) are rejected.

TwoPortSParams parse_touchstone(std::string_view text);
OnePortTrace parse_touchstone_one_port(std::string_view text);

std::string write_touchstone(const TwoPortSParams& s, TouchstoneOptions opts = {});
std::string write_touchstone(const OnePortTrace& s, TouchstoneOptions opts = {});

TwoPortSParams read_touchstone_file(const std::filesystem::path& path);
OnePortTrace read_touchstone_one_port_file(const std::filesystem::path& path);

}  // namespace cryonoise
