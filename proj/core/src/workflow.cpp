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

#include "cryonoise/workflow.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"
#include "cryonoise/serial_bias.hpp"
#include "cryonoise/touchstone.hpp"

namespace cryonoise {
namespace {

constexpr const char* kReportFormat = "cryonoise-report/1";
constexpr int kEmittingPort = 2;

std::string hz_text(Frequency f) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g Hz", f.hz());
  return buf;
}

// Step 2: SOL per port from the reflection traces, transmission from the thru.
ErrorBoxes derive_error_boxes(const RawRecord& raw, const ProtocolPlan& plan) {
  OnePortMeasurement p1, p2;
  p1.freqs = p2.freqs = raw.short_std->freqs();
  for (std::size_t i = 0; i < p1.freqs.size(); ++i) {
    p1.short_m.push_back((*raw.short_std)[i].s11);
    p1.open_m.push_back((*raw.open_std)[i].s11);
    p1.load_m.push_back((*raw.load_std)[i].s11);
    p2.short_m.push_back((*raw.short_std)[i].s22);
    p2.open_m.push_back((*raw.open_std)[i].s22);
    p2.load_m.push_back((*raw.load_std)[i].s22);
  }
  const auto t1 = solve_one_port(p1);
  const auto t2 = solve_one_port(p2);
  return solve_solr(t1, t2, *raw.thru, plan.phase_estimate);
}

TwoPortSParams corrected(const TwoPortSParams& raw, const ErrorBoxes& eb, const char* what) {
  auto r = deembed(raw, eb);
  if (!r.flagged.empty())
    throw SingularError(std::string("singular correction of ") + what + " at " +
                        hz_text(r.dut.freqs()[r.flagged.front()]));
  return std::move(r.dut);
}

PlanckFitResult derive_planck(const CalibrationReport& r) {
  PlanckSweep sweep;
  sweep.grid = r.plan.freqs;
  sweep.records = r.raw.sweep;
  sweep.source = NoiseSourceModel{*r.vts_sparams, SourceKind::thermal, kEmittingPort};
  FitOptions opts;
  opts.threads = r.plan.threads;
  return fit_planck(sweep, opts);
}

AddedNoiseResult derive_added_noise(const CalibrationReport& r) {
  AddedNoiseInputs in;
  in.psd = r.raw.dut_psd;
  const double rel = 1.0 / std::sqrt(static_cast<double>(r.plan.averages));
  for (std::size_t i = 0; i < r.plan.freqs.size(); ++i) {
    in.gain.push_back(std::norm((*r.dut_sparams)[i].s21));
    in.n_in.push_back(r.plan.n_in);
    in.sigma_psd.push_back(in.psd[i] * rel);
  }
  return extract_added_noise(in, r.planck_fit->to_readout_chain());
}

// Derives every artifact the raw record supports. The protocol runner and
// replay() both go through here so results agree to the last bit.
void derive(CalibrationReport& r) {
  const auto& raw = r.raw;
  r.completed_step = 1;
  if (!(raw.short_std && raw.open_std && raw.load_std && raw.thru)) return;
  r.error_boxes = derive_error_boxes(raw, r.plan);
  r.completed_step = 2;
  if (!raw.dut_sparams) return;
  r.dut_sparams = corrected(*raw.dut_sparams, *r.error_boxes, "DUT S-parameters");
  r.completed_step = 3;
  if (raw.dut_psd_survey.empty()) return;
  r.completed_step = 4;
  if (!raw.vts_sparams) return;
  r.vts_sparams = corrected(*raw.vts_sparams, *r.error_boxes, "VTS S-parameters");
  r.qualification = QualificationResult{
      kEmittingPort, r.plan.qualification_threshold,
      source_qualification(*r.vts_sparams, kEmittingPort, r.plan.qualification_threshold)};
  if (!r.qualification->all_pass()) return;
  r.completed_step = 5;
  if (raw.sweep.empty()) return;
  r.planck_fit = derive_planck(r);
  r.completed_step = 6;
  if (raw.dut_psd.empty()) return;
  const auto chain = r.planck_fit->to_readout_chain();
  std::vector<double> n_out;
  for (std::size_t i = 0; i < chain.size(); ++i)
    n_out.push_back((raw.dut_psd[i] / chain.gain[i] -
                     constants::boltzmann * chain.noise_temperature[i]) /
                    chain.freqs[i].photon_energy());
  r.n_out = std::move(n_out);
  r.completed_step = 7;
  r.added_noise = derive_added_noise(r);
  r.completed_step = 8;
}

std::string qualification_message(const CalibrationReport& r) {
  const auto& q = *r.qualification;
  std::size_t failing = 0;
  std::size_t first = 0;
  for (std::size_t i = q.pass.size(); i-- > 0;) {
    if (!q.pass[i]) {
      ++failing;
      first = i;
    }
  }
  char thr[32];
  std::snprintf(thr, sizeof thr, "%g", q.threshold);
  return "step 5: VTS source qualification failed, |S21|^2 <= " + std::string(thr) +
         " (1 - |S22|^2) violated at " + std::to_string(failing) + " of " +
         std::to_string(q.pass.size()) + " frequencies (first at " +
         hz_text(r.plan.freqs[first]) + ")";
}

nlohmann::json sweep_to_json(const std::vector<SweepRecord>& sweep) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : sweep) a.push_back({{"T_K", s.temperature}, {"psd", s.psd}});
  return a;
}

nlohmann::json raw_to_json(const RawRecord& raw) {
  nlohmann::json j = nlohmann::json::object();
  auto put = [&](const char* key, const std::optional<TwoPortSParams>& s) {
    j[key] = s ? nlohmann::json(write_touchstone(*s)) : nlohmann::json(nullptr);
  };
  put("short", raw.short_std);
  put("open", raw.open_std);
  put("load", raw.load_std);
  put("thru", raw.thru);
  put("dut_sparams", raw.dut_sparams);
  j["dut_psd_survey"] = raw.dut_psd_survey;
  put("vts_sparams", raw.vts_sparams);
  j["sweep"] = sweep_to_json(raw.sweep);
  j["dut_psd"] = raw.dut_psd;
  return j;
}

RawRecord raw_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"short", "open", "load", "thru", "dut_sparams", "dut_psd_survey",
                       "vts_sparams", "sweep", "dut_psd"},
                      "raw record");
  RawRecord raw;
  auto get = [&](const char* key) -> std::optional<TwoPortSParams> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return parse_touchstone(it->get<std::string>());
  };
  raw.short_std = get("short");
  raw.open_std = get("open");
  raw.load_std = get("load");
  raw.thru = get("thru");
  raw.dut_sparams = get("dut_sparams");
  raw.vts_sparams = get("vts_sparams");
  raw.dut_psd_survey = value_or(j, "dut_psd_survey", std::vector<double>{});
  raw.dut_psd = value_or(j, "dut_psd", std::vector<double>{});
  if (j.contains("sweep")) {
    for (const auto& s : j.at("sweep")) {
      raw.sweep.push_back({required<double>(s, "T_K", "sweep record"),
                           required<std::vector<double>>(s, "psd", "sweep record")});
    }
  }
  return raw;
}

nlohmann::json results_to_json(const CalibrationReport& r) {
  nlohmann::json j = nlohmann::json::object();
  auto opt = [](const auto& o, auto&& f) { return o ? f(*o) : nlohmann::json(nullptr); };
  j["error_boxes"] = opt(r.error_boxes, [](const ErrorBoxes& e) { return to_json(e); });
  j["dut_sparams"] =
      opt(r.dut_sparams, [](const TwoPortSParams& s) { return nlohmann::json(write_touchstone(s)); });
  j["vts_sparams"] =
      opt(r.vts_sparams, [](const TwoPortSParams& s) { return nlohmann::json(write_touchstone(s)); });
  j["qualification"] = opt(r.qualification, [](const QualificationResult& q) {
    return nlohmann::json{{"emitting_port", q.emitting_port},
                          {"threshold", q.threshold},
                          {"pass", q.pass},
                          {"all_pass", q.all_pass()}};
  });
  j["planck_fit"] = opt(r.planck_fit, [](const PlanckFitResult& p) { return to_json(p); });
  j["n_out"] = opt(r.n_out, [](const std::vector<double>& v) { return nlohmann::json(v); });
  j["added_noise"] = opt(r.added_noise, [](const AddedNoiseResult& a) { return to_json(a); });
  return j;
}

class StepClock {
 public:
  StepClock(CalibrationReport& r, RunLog& log, const Clock* clock)
      : report_(r), log_(log), clock_(clock) {}
  void begin(int step) {
    log_.set_step(step);
    report_.timings.push_back({step, now(), now()});
  }
  void end() { report_.timings.back().end_s = now(); }

 private:
  double now() const { return clock_ ? clock_->now() : 0.0; }
  CalibrationReport& report_;
  RunLog& log_;
  const Clock* clock_;
};

}  // namespace

void ProtocolPlan::validate() const {
  if (freqs.empty()) throw ConfigError("plan: empty frequency grid");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!(freqs[i].hz() > 0.0)) throw ConfigError("plan: frequencies must be positive");
    if (i > 0 && !(freqs[i] > freqs[i - 1])) throw ConfigError("plan: frequencies must ascend");
  }
  std::set<double> distinct;
  for (double t : temperatures) {
    if (!(t >= 0.0)) throw ConfigError("plan: VTS temperatures must be non-negative");
    distinct.insert(t);
  }
  if (distinct.size() < 2) throw ConfigError("plan: need at least 2 distinct VTS temperatures");
  if (!(rbw_hz > 0.0)) throw ConfigError("plan: rbw_hz must be positive");
  if (averages == 0) throw ConfigError("plan: averages must be positive");
  if (!(settle_tolerance > 0.0)) throw ConfigError("plan: settle tolerance must be positive");
  if (!(settle_timeout_s >= 0.0)) throw ConfigError("plan: settle timeout must be non-negative");
  if (!(qualification_threshold > 0.0 && qualification_threshold < 1.0))
    throw ConfigError("plan: qualification threshold must lie in (0, 1)");
  if (phase_estimate && phase_estimate->size() != freqs.size())
    throw ConfigError("plan: phase estimate needs one value per frequency");
  if (!(n_in >= 0.0)) throw ConfigError("plan: n_in must be non-negative");
}

ProtocolPlan plan_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("plan must be a JSON object");
  reject_unknown_keys(j,
                      {"freq_hz", "freq_grid", "temperatures_K", "rbw_hz", "averages",
                       "settle_tolerance_K", "settle_timeout_s", "qualification_threshold",
                       "phase_estimate_rad", "n_in", "threads"},
                      "plan");
  ProtocolPlan p;
  if (j.contains("freq_hz") == j.contains("freq_grid"))
    throw ConfigError("plan needs exactly one of freq_hz, freq_grid");
  if (j.contains("freq_hz")) {
    for (double f : j.at("freq_hz").get<std::vector<double>>()) p.freqs.emplace_back(f);
  } else {
    const auto& g = j.at("freq_grid");
    reject_unknown_keys(g, {"start_hz", "stop_hz", "points"}, "freq_grid");
    const double a = required<double>(g, "start_hz", "freq_grid");
    const double b = required<double>(g, "stop_hz", "freq_grid");
    const auto n = required<std::size_t>(g, "points", "freq_grid");
    if (n == 0) throw ConfigError("freq_grid: points must be positive");
    for (std::size_t i = 0; i < n; ++i)
      p.freqs.emplace_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  p.temperatures = required<std::vector<double>>(j, "temperatures_K", "plan");
  p.rbw_hz = value_or(j, "rbw_hz", p.rbw_hz);
  p.averages = value_or(j, "averages", p.averages);
  p.settle_tolerance = value_or(j, "settle_tolerance_K", p.settle_tolerance);
  p.settle_timeout_s = value_or(j, "settle_timeout_s", p.settle_timeout_s);
  p.qualification_threshold = value_or(j, "qualification_threshold", p.qualification_threshold);
  if (j.contains("phase_estimate_rad") && !j.at("phase_estimate_rad").is_null())
    p.phase_estimate = j.at("phase_estimate_rad").get<std::vector<double>>();
  p.n_in = value_or(j, "n_in", p.n_in);
  p.threads = value_or(j, "threads", p.threads);
  p.validate();
  return p;
}

nlohmann::json to_json(const ProtocolPlan& p) {
  std::vector<double> f;
  for (auto x : p.freqs) f.push_back(x.hz());
  return {{"freq_hz", f},
          {"temperatures_K", p.temperatures},
          {"rbw_hz", p.rbw_hz},
          {"averages", p.averages},
          {"settle_tolerance_K", p.settle_tolerance},
          {"settle_timeout_s", p.settle_timeout_s},
          {"qualification_threshold", p.qualification_threshold},
          {"phase_estimate_rad",
           p.phase_estimate ? nlohmann::json(*p.phase_estimate) : nlohmann::json(nullptr)},
          {"n_in", p.n_in},
          {"threads", p.threads}};
}

bool QualificationResult::all_pass() const {
  for (bool b : pass)
    if (!b) return false;
  return true;
}

CalibrationReport run_protocol(InstrumentSuite suite, const ProtocolPlan& plan, RunLog& log,
                               std::uint64_t seed, std::string hash) {
  plan.validate();
  LoggedSuite logged(suite, log);
  const InstrumentSuite s = logged.suite();
  CalibrationReport r;
  r.plan = plan;
  r.seed = seed;
  r.config_hash = std::move(hash);
  StepClock steps(r, log, suite.clock);
  const std::span<const Frequency> grid(plan.freqs);

  steps.begin(2);
  s.switches->select(Throw::short_std);
  r.raw.short_std = s.vna->measure_sparams(grid);
  s.switches->select(Throw::open_std);
  r.raw.open_std = s.vna->measure_sparams(grid);
  s.switches->select(Throw::load_std);
  r.raw.load_std = s.vna->measure_sparams(grid);
  s.switches->select(Throw::thru);
  r.raw.thru = s.vna->measure_sparams(grid);
  derive(r);
  steps.end();

  steps.begin(3);
  s.switches->select(Throw::dut);
  r.raw.dut_sparams = s.vna->measure_sparams(grid);
  derive(r);
  steps.end();

  steps.begin(4);
  r.raw.dut_psd_survey = s.spectrum->measure_psd(grid, plan.rbw_hz, plan.averages);
  derive(r);
  steps.end();

  steps.begin(5);
  s.switches->select(Throw::vts);
  r.raw.vts_sparams = s.vna->measure_sparams(grid);
  derive(r);
  steps.end();
  if (!r.qualification->all_pass()) {
    r.abort_reason = qualification_message(r);
    throw ProtocolAborted(5, r.abort_reason, r);
  }

  steps.begin(6);
  for (double t : plan.temperatures) {
    s.temperature->set_setpoint(t);
    if (!s.temperature->wait_stable(plan.settle_tolerance, plan.settle_timeout_s)) {
      steps.end();
      r.abort_reason = "step 6: VTS did not settle at " + std::to_string(t) + " K within " +
                       std::to_string(plan.settle_timeout_s) + " s";
      throw ProtocolAborted(6, r.abort_reason, r);
    }
    const double measured = s.temperature->read_temperature();
    r.raw.sweep.push_back({measured, s.spectrum->measure_psd(grid, plan.rbw_hz, plan.averages)});
  }
  derive(r);
  steps.end();

  steps.begin(7);
  s.switches->select(Throw::dut);
  r.raw.dut_psd = s.spectrum->measure_psd(grid, plan.rbw_hz, plan.averages);
  steps.end();

  steps.begin(8);
  derive(r);
  steps.end();
  return r;
}

CalibrationReport run_virtual_protocol(const VirtualCryostatConfig& cfg, const ProtocolPlan& plan,
                                       RunLog* log) {
  VirtualCryostat cryostat(cfg);
  RunLog local;
  return run_protocol(cryostat.suite(), plan, log ? *log : local, cfg.seed, config_hash(cfg, plan));
}

nlohmann::json to_json(const CalibrationReport& r) {
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& t : r.timings)
    timings.push_back({{"step", t.step}, {"start_s", t.start_s}, {"end_s", t.end_s}});
  nlohmann::json raw = raw_to_json(r.raw);
  const std::string checksum = fnv1a64_hex(raw.dump());
  return {{"format", kReportFormat},
          {"plan", to_json(r.plan)},
          {"seed", r.seed},
          {"config_hash", r.config_hash},
          {"completed_step", r.completed_step},
          {"abort_reason", r.abort_reason},
          {"timings", std::move(timings)},
          {"raw", std::move(raw)},
          {"raw_checksum", checksum},
          {"results", results_to_json(r)}};
}

CalibrationReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.empty()) throw ConfigError("empty calibration report");
  reject_unknown_keys(j,
                      {"format", "plan", "seed", "config_hash", "completed_step", "abort_reason",
                       "timings", "raw", "raw_checksum", "results"},
                      "calibration report");
  if (value_or<std::string>(j, "format", "") != kReportFormat)
    throw ConfigError("not a calibration report (format tag missing or unknown)");
  if (!j.contains("plan") || !j.contains("raw"))
    throw ConfigError("calibration report lacks plan or raw record");
  CalibrationReport r;
  r.plan = plan_from_json(j.at("plan"));
  r.raw = raw_from_json(j.at("raw"));
  r.seed = value_or<std::uint64_t>(j, "seed", 0);
  r.config_hash = value_or<std::string>(j, "config_hash", "");
  r.abort_reason = value_or<std::string>(j, "abort_reason", "");
  if (j.contains("timings"))
    for (const auto& t : j.at("timings"))
      r.timings.push_back({required<int>(t, "step", "timing"), required<double>(t, "start_s", "timing"),
                           required<double>(t, "end_s", "timing")});
  derive(r);
  return r;
}

ReplayResult replay(const nlohmann::json& report) {
  if (!report.is_object() || report.empty()) throw ConfigError("empty calibration report");
  ReplayResult out;
  try {
    out.recomputed = to_json(report_from_json(report));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out.mismatches.push_back(std::string("re-derivation failed: ") + e.what());
  }
  if (out.mismatches.empty()) {
    const auto& stored =
        report.contains("results") ? report.at("results") : nlohmann::json::object();
    for (const auto& [key, value] : out.recomputed.at("results").items()) {
      if (!stored.contains(key) || stored.at(key).dump() != value.dump())
        out.mismatches.push_back("results." + key);
    }
    if (report.value("completed_step", -1) != out.recomputed.at("completed_step").get<int>())
      out.mismatches.push_back("completed_step");
    out.results_match = out.mismatches.empty();
  }
  out.checksum_ok = report.contains("raw_checksum") && report.at("raw_checksum").is_string() &&
                    fnv1a64_hex(report.at("raw").dump()) ==
                        report.at("raw_checksum").get<std::string>();
  if (!out.checksum_ok) out.mismatches.push_back("raw_checksum");
  return out;
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const VirtualCryostatConfig& cfg, const ProtocolPlan& plan) {
  return fnv1a64_hex(to_json(cfg).dump() + "\n" + to_json(plan).dump());
}

SerialContrast serial_contrast(const VirtualCryostatConfig& cfg, const ProtocolPlan& plan,
                               std::size_t index) {
  if (index >= plan.freqs.size()) throw ConfigError("serial contrast: frequency index out of range");
  const CalibrationReport sub = run_virtual_protocol(cfg, plan);
  const Frequency f = plan.freqs[index];
  const double hf = f.photon_energy();
  const double g = std::norm((*sub.dut_sparams)[index].s21);
  const auto& fit = sub.planck_fit->points[index];

  SerialContrast c;
  c.freq = f;
  c.n_add_true = cfg.dut.true_added_noise(f);
  c.n_add_substitution = sub.added_noise->points[index].n_add;

  // Serial sweep: the VTS now feeds the DUT input.
  VirtualCryostat cryostat(cfg, Topology::serial);
  const SMatrix vts = (*sub.vts_sparams)[index];
  const Frequency idler(std::abs(f.hz() - cfg.dut.pump_hz));
  const std::vector<Frequency> one{f};
  std::vector<SerialPoint> pts;
  cryostat.select(Throw::dut);
  for (double t : plan.temperatures) {
    cryostat.set_setpoint(t);
    if (!cryostat.wait_stable(plan.settle_tolerance, plan.settle_timeout_s))
      throw DiagnosticError("serial contrast: VTS did not settle");
    const double temp = cryostat.read_temperature();
    SerialPoint p;
    p.temperature = temp;
    p.epsilon = epsilon_from_temperature(f, temp);
    p.n_cal = source_output_occupation(std::norm(vts.s22), std::norm(vts.s21),
                                       planck_occupation(f, temp)) +
              source_output_occupation(std::norm(vts.s22), std::norm(vts.s21),
                                       planck_occupation(idler, temp));
    p.n_meas = cryostat.measure_psd(one, plan.rbw_hz, plan.averages)[0] / hf;
    pts.push_back(p);
  }
  const OlsFit ols = oracle_ols(pts);
  c.n_add_serial = plan.n_in + ols.noise_fit - constants::boltzmann * fit.noise_temperature / (hf * g);
  const ChainPoint chain = cfg.chain.at(f);
  const double noise_true_zero =
      c.n_add_true - 0.5 + constants::boltzmann * chain.noise_temperature / (hf * cfg.dut.gain());
  c.serial_noise_error = ols.noise_fit - noise_true_zero;

  SerialBiasConfig sb;
  sb.signal = f;
  sb.pump = Frequency(cfg.dut.pump_hz);
  sb.gain = cfg.dut.gain();
  sb.g_sys = chain.gain;
  sb.t_sys = chain.noise_temperature;
  sb.modes.push_back({-1, idler.hz(), 1.0, sb.gain, 0.0});
  for (const auto& m : cfg.dut.modes) {
    if (m.n == -1) continue;
    sb.modes.push_back({m.n, std::abs(f.hz() + m.n * cfg.dut.pump_hz), 1.0, m.x2_forward, m.x2_back});
  }
  for (double t : plan.temperatures) sb.epsilon_grid.push_back(epsilon_from_temperature(f, t));
  const SerialBiasReport bias = analytic_bias(sb);
  c.beta = bias.beta;
  c.predicted_noise_error = bias.asymptotics.predicted_error;
  return c;
}

}  // namespace cryonoise
