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

// Substitution-topology noise characterization protocol:
//   2 SOLR calibration        3 DUT S-parameters       4 DUT noise PSD
//   5 VTS S-parameters and source qualification
//   6 VTS temperature sweep and Planck fit
//   7 DUT output PSD -> N_out  8 added noise
// Step 1 (mounting) is the construction of the instrument backend.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryonoise/error.hpp"
#include "cryonoise/instruments.hpp"
#include "cryonoise/planck_calibration.hpp"
#include "cryonoise/solr.hpp"
#include "cryonoise/virtual_cryostat.hpp"

namespace cryonoise {

struct ProtocolPlan {
  std::vector<Frequency> freqs;
  std::vector<double> temperatures;  // VTS schedule, K
  double rbw_hz = 20e3;
  std::uint64_t averages = 1000000;
  double settle_tolerance = 1e-3;  // K
  double settle_timeout_s = 3600.0;
  double qualification_threshold = 0.1;
  std::optional<std::vector<double>> phase_estimate;  // rad, reciprocal standard S21
  double n_in = 0.5;
  unsigned threads = 1;

  void validate() const;
};

ProtocolPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProtocolPlan& p);

/// Everything the instruments returned; derived results are a pure
/// function of this record.
struct RawRecord {
  std::optional<TwoPortSParams> short_std, open_std, load_std, thru;
  std::optional<TwoPortSParams> dut_sparams;
  std::vector<double> dut_psd_survey;  // step 4
  std::optional<TwoPortSParams> vts_sparams;
  std::vector<SweepRecord> sweep;      // step 6
  std::vector<double> dut_psd;         // step 7
};

struct QualificationResult {
  int emitting_port = 2;
  double threshold = 0.1;
  std::vector<bool> pass;

  bool all_pass() const;
};

struct StepTiming {
  int step = 0;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct CalibrationReport {
  ProtocolPlan plan;
  RawRecord raw;
  int completed_step = 1;

  std::optional<ErrorBoxes> error_boxes;            // step 2
  std::optional<TwoPortSParams> dut_sparams;        // step 3
  std::optional<TwoPortSParams> vts_sparams;        // step 5
  std::optional<QualificationResult> qualification; // step 5
  std::optional<PlanckFitResult> planck_fit;        // step 6
  std::optional<std::vector<double>> n_out;         // step 7
  std::optional<AddedNoiseResult> added_noise;      // step 8

  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<StepTiming> timings;
  std::string abort_reason;
};

/// Step-5 source qualification failure. Carries the partial report.
class ProtocolAborted : public DiagnosticError {
 public:
  ProtocolAborted(int step, const std::string& what, CalibrationReport partial)
      : DiagnosticError(what), step_(step), report_(std::move(partial)) {}
  int step() const { return step_; }
  const CalibrationReport& report() const { return report_; }

 private:
  int step_;
  CalibrationReport report_;
};

/// Runs steps 2-8 against the suite, appending every instrument call to
/// `log`. `seed` and `config_hash` are recorded as provenance only.
CalibrationReport run_protocol(InstrumentSuite suite, const ProtocolPlan& plan, RunLog& log,
                               std::uint64_t seed = 0, std::string config_hash = {});

/// Convenience: builds a VirtualCryostat from `cfg` and runs the protocol.
CalibrationReport run_virtual_protocol(const VirtualCryostatConfig& cfg, const ProtocolPlan& plan,
                                       RunLog* log = nullptr);

/// Report serialization. Raw two-port data is embedded as Touchstone text
/// (Hz, RI, 17 significant digits) so parsing restores identical doubles.
/// "raw_checksum" is FNV-1a 64 of the serialized raw section.
nlohmann::json to_json(const CalibrationReport& r);
/// Restores plan, raw record and provenance; derived results are recomputed
/// from the raw record rather than read back.
CalibrationReport report_from_json(const nlohmann::json& j);

struct ReplayResult {
  bool checksum_ok = false;
  bool results_match = false;
  nlohmann::json recomputed;  // full report rebuilt from the raw record
  std::vector<std::string> mismatches;

  bool ok() const { return checksum_ok && results_match; }
};

/// Re-derives every result from the stored raw record and compares it
/// byte-for-byte with the stored results. Throws ConfigError for an empty
/// or malformed report.
ReplayResult replay(const nlohmann::json& report);

std::string fnv1a64_hex(std::string_view bytes);
std::string config_hash(const VirtualCryostatConfig& cfg, const ProtocolPlan& plan);

/// Serial-versus-substitution comparison on the same virtual hardware.
struct SerialContrast {
  Frequency freq;
  double n_add_true = 0.0;
  double n_add_substitution = 0.0;
  double n_add_serial = 0.0;
  double serial_noise_error = 0.0;     // N~_fit - N~(0)
  double predicted_noise_error = 0.0;  // asymptotic prediction for the same DUT
  double beta = 0.0;
};

/// Runs the substitution protocol, then a serial-topology VTS sweep at
/// plan.freqs[index] analyzed with the affine two-mode model. The VTS is
/// taken as frequency-flat for the intermodulation modes.
SerialContrast serial_contrast(const VirtualCryostatConfig& cfg, const ProtocolPlan& plan,
                               std::size_t index = 0);

}  // namespace cryonoise
