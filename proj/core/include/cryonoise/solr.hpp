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

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryonoise/sparams.hpp"

namespace cryonoise {

/// Three-term error model of one port:
///   Gamma_m = e00 + e10e01 Gamma / (1 - e11 Gamma).
struct OnePortTerms {
  Complex directivity{};         // e00 (e33 on port 2)
  Complex source_match{};        // e11 (e22 on port 2)
  Complex reflection_tracking{1.0, 0.0};  // e10e01 (e23e32 on port 2)
};

/// Reflection coefficient of a calibration standard, either an ideal
/// constant or a tabulated model that overrides it.
struct ReflectionStandard {
  Complex ideal{};
  std::optional<OnePortTrace> model;

  Complex at(Frequency f) const { return model ? model->at(f) : ideal; }
};

struct OnePortStandards {
  ReflectionStandard short_std{Complex(-1.0, 0.0), std::nullopt};
  ReflectionStandard open_std{Complex(1.0, 0.0), std::nullopt};
  ReflectionStandard load_std{Complex(0.0, 0.0), std::nullopt};
};

/// Raw reflection traces of the three standards on a common grid.
struct OnePortMeasurement {
  std::vector<Frequency> freqs;
  std::vector<Complex> short_m, open_m, load_m;
};

/// Eight-term error model at one frequency.
struct ErrorTerms {
  OnePortTerms port1;
  OnePortTerms port2;
  Complex transmission_fwd{1.0, 0.0};  // e10e32
  Complex transmission_rev{1.0, 0.0};  // e23e01
};

struct ErrorBoxes {
  std::vector<Frequency> freqs;
  std::vector<ErrorTerms> terms;
};

/// Solves the bilinear one-port model exactly from three standards per
/// frequency. Throws SingularError for degenerate standards.
std::vector<OnePortTerms> solve_one_port(const OnePortMeasurement& measured,
                                         const OnePortStandards& standards = {});
OnePortTerms solve_one_port(Complex short_m, Complex open_m, Complex load_m,
                            Complex short_std, Complex open_std, Complex load_std);

/// Fixes the transmission tracking from a reciprocal standard measured
/// through both error boxes. The square root is resolved so that the
/// corrected standard's S21 lies within +-90 deg of `phase_estimate`
/// (radians, one per frequency). Without an estimate the lowest frequency
/// is referenced to 0 rad and later points follow phase continuity; a step
/// larger than pi/4 is reported as ambiguous (DiagnosticError).
ErrorBoxes solve_solr(std::span<const OnePortTerms> port1, std::span<const OnePortTerms> port2,
                      const TwoPortSParams& measured_reciprocal,
                      std::optional<std::vector<double>> phase_estimate = std::nullopt);

/// Identity boxes on a grid.
ErrorBoxes identity_error_boxes(std::span<const Frequency> grid);

/// Forward model: the raw two-port seen through the error boxes.
SMatrix embed(const SMatrix& dut, const ErrorTerms& e);
TwoPortSParams embed(const TwoPortSParams& dut, const ErrorBoxes& eb);

/// Eight-term correction of one raw matrix. Returns nullopt when the
/// correction is singular at this point.
std::optional<SMatrix> deembed(const SMatrix& raw, const ErrorTerms& e);

struct DeembedResult {
  TwoPortSParams dut;
  /// Indices of points whose correction was singular; those entries hold NaN.
  std::vector<std::size_t> flagged;
};

DeembedResult deembed(const TwoPortSParams& raw, const ErrorBoxes& eb);

/// JSON export: {"freq_hz": [...], "terms": [{"e00": [re, im], ...}]}.
nlohmann::json to_json(const ErrorBoxes& eb);
ErrorBoxes error_boxes_from_json(const nlohmann::json& j);

}  // namespace cryonoise
