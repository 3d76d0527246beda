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

#include "cryonoise_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"
#include "cryonoise/planck_calibration.hpp"
#include "cryonoise/serial_bias.hpp"
#include "cryonoise/solr.hpp"
#include "cryonoise/thermal_chain.hpp"
#include "cryonoise/touchstone.hpp"
#include "cryonoise/workflow.hpp"

namespace cryonoise::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Paths that do not exist as given are looked up in the fixture directory.
fs::path resolve(const std::string& p) {
  const fs::path path(p);
  if (fs::exists(path) || path.is_absolute()) return path;
  const fs::path fallback = data_dir() / path;
  return fs::exists(fallback) ? fallback : path;
}

json load_json(const std::string& p, bool is_config) {
  const std::string text = read_text_file(resolve(p));
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::string msg = p + ": invalid JSON: " + e.what();
    if (is_config) throw ConfigError(msg);
    throw ParseError(msg, 0);
  }
}

void write_output(const std::optional<std::string>& dir, const std::string& name,
                  const std::string& content, std::ostream& out) {
  if (!dir) return;
  fs::create_directories(*dir);
  const fs::path path = fs::path(*dir) / name;
  write_text_file_atomic(path, content);
  out << "wrote " << path.string() << "\n";
}

struct Common {
  std::optional<std::string> out_dir;
  unsigned threads = 1;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out_dir, "Output directory");
  sub->add_option("--threads", c.threads, "Worker threads for per-frequency work")
      ->check(CLI::Range(1u, 256u));
  sub->add_flag("-q,--quiet", c.quiet, "Suppress the summary");
}

// cascade ---------------------------------------------------------------

struct CascadeArgs {
  Common common;
  bool table1 = false;
  std::optional<std::string> config;
  double freq = 5e9;
};

int cmd_cascade(const CascadeArgs& a, std::ostream& out) {
  if (a.table1 == a.config.has_value())
    throw ConfigError("cascade needs exactly one of --table1, --config");
  const ChainSpec spec = a.table1 ? reference_input_line() : chain_spec_from_json(load_json(*a.config, true));
  if (spec.stages.empty()) throw ConfigError("chain has no stages");
  const std::string csv = stage_table_report(spec, Frequency(a.freq));
  if (a.common.out_dir)
    write_output(a.common.out_dir, "cascade.csv", csv, out);
  else
    out << csv;
  if (!a.common.quiet) {
    const auto n = cascade_occupation(spec, Frequency(a.freq));
    out << "final occupation at " << fmt("%g", a.freq) << " Hz: " << fmt("%.4f", n.back())
        << " photons\n";
  }
  return kOk;
}

// planck-fit ------------------------------------------------------------

struct PlanckArgs {
  Common common;
  std::string sweep;
  std::string source = "ideal";
};

int cmd_planck_fit(const PlanckArgs& a, std::ostream& out) {
  PlanckSweep sweep = parse_sweep_csv(read_text_file(resolve(a.sweep)));
  if (a.source != "ideal")
    sweep.source = NoiseSourceModel{read_touchstone_file(resolve(a.source)), SourceKind::thermal, 2};
  FitOptions opts;
  opts.threads = a.common.threads;
  const PlanckFitResult fit = fit_planck(sweep, opts);
  write_output(a.common.out_dir, "planck_fit.json", to_json(fit).dump(2) + "\n", out);
  write_output(a.common.out_dir, "planck_fit.csv", results_csv(fit), out);
  if (!a.common.quiet) {
    out << "freq_hz        G_sys_dB     T_sys_K      sigma_T_K\n";
    for (const auto& p : fit.points)
      out << fmt("%-14.6g ", p.freq.hz()) << fmt("%-12.6f ", 10.0 * std::log10(p.gain))
          << fmt("%-12.6f ", p.noise_temperature) << fmt("%.3g", p.sigma_noise_temperature)
          << (p.negative_noise_temperature ? "  (negative T_sys)" : "") << "\n";
  }
  if (!fit.ok()) throw DiagnosticError("Planck fit returned a non-positive gain");
  return kOk;
}

// synth-sweep -----------------------------------------------------------

struct SynthArgs {
  Common common;
  double g_sys_db = 70.9;
  double t_sys = 4.65;
  double f_start = 4e9, f_stop = 8e9;
  std::size_t points = 5;
  double t_min = 0.02, t_max = 2.0;
  std::size_t temperatures = 10;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

int cmd_synth_sweep(const SynthArgs& a, std::ostream& out) {
  if (a.points == 0 || a.temperatures < 2) throw ConfigError("need >= 1 frequency and >= 2 temperatures");
  PlanckSweep sweep;
  for (std::size_t i = 0; i < a.points; ++i)
    sweep.grid.emplace_back(a.points == 1 ? a.f_start
                                          : a.f_start + (a.f_stop - a.f_start) * static_cast<double>(i) /
                                                            static_cast<double>(a.points - 1));
  const ChainPoint chain{std::pow(10.0, a.g_sys_db / 10.0), a.t_sys};
  std::mt19937_64 rng(a.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < a.temperatures; ++k) {
    SweepRecord r;
    r.temperature = a.t_min + (a.t_max - a.t_min) * static_cast<double>(k) /
                                  static_cast<double>(a.temperatures - 1);
    for (Frequency f : sweep.grid)
      r.psd.push_back(psd_from_occupation(planck_occupation(f, r.temperature), f, chain));
    sweep.records.push_back(std::move(r));
  }
  if (a.noise > 0.0) {
    for (std::size_t j = 0; j < sweep.grid.size(); ++j) {
      double mean = 0.0;
      for (const auto& r : sweep.records) mean += r.psd[j];
      mean /= static_cast<double>(sweep.records.size());
      for (auto& r : sweep.records) r.psd[j] += a.noise * mean * gauss(rng);
    }
  }
  const std::string csv = write_sweep_csv(sweep);
  if (a.common.out_dir)
    write_output(a.common.out_dir, "sweep.csv", csv, out);
  else
    out << csv;
  return kOk;
}

// bias ------------------------------------------------------------------

struct BiasArgs {
  Common common;
  std::optional<std::string> config;
  std::optional<double> gain_db;
  bool no_spurs = false;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

int cmd_bias(const BiasArgs& a, std::ostream& out) {
  SerialBiasConfig cfg;
  if (a.config) {
    if (a.gain_db) throw ConfigError("--gain-db applies to the built-in configuration only");
    cfg = serial_config_from_json(load_json(*a.config, true));
    if (a.no_spurs)
      std::erase_if(cfg.modes, [](const ModeSpec& m) { return m.n != 0 && m.n != -1; });
  } else {
    SupplConfigOptions o;
    if (a.gain_db) o.gain_db = *a.gain_db;
    o.spurs = !a.no_spurs;
    cfg = build_suppl_config(o);
  }
  std::optional<MeasurementNoise> noise;
  if (a.noise_sigma > 0.0) noise = MeasurementNoise{a.noise_sigma, a.seed};
  const SerialBiasReport r = run_bias_analysis(cfg, noise);
  json j = to_json(r);
  j["config"] = to_json(cfg);
  write_output(a.common.out_dir, "bias_report.json", j.dump(2) + "\n", out);
  write_output(a.common.out_dir, "bias_residuals.csv", residual_csv(r), out);

  const double dg = rel_diff(r.oracle->gain_fit, r.gain_fit_analytic);
  const double dn = rel_diff(r.oracle->noise_fit, r.noise_fit_analytic);
  if (!a.common.quiet) {
    out << "beta                 " << fmt("%.6g", r.beta) << "\n"
        << "gain true / fit      " << fmt("%.6g", r.gain_true) << " / "
        << fmt("%.6g", r.gain_fit_analytic) << "\n"
        << "N~ true(0) / fit     " << fmt("%.6g", r.noise_true_zero) << " / "
        << fmt("%.6g", r.noise_fit_analytic) << "\n"
        << "noise error          " << fmt("%.6g", r.noise_error) << "\n"
        << "asymptotic beta      " << fmt("%.6g", r.asymptotics.beta_asym) << "\n"
        << "predicted error      " << fmt("%.6g", r.asymptotics.predicted_error) << "\n"
        << "oracle vs analytic   gain " << fmt("%.2e", dg) << ", noise " << fmt("%.2e", dn)
        << " (relative)\n";
  }
  if (!noise && (dg > 1e-9 || dn > 1e-9))
    throw DiagnosticError("OLS oracle disagrees with the analytic estimators");
  return kOk;
}

// solr ------------------------------------------------------------------

struct SolrArgs {
  Common common;
  std::string short_path, open_path, load_path, thru_path;
  std::optional<std::string> dut_path;
};

int cmd_solr(const SolrArgs& a, std::ostream& out) {
  const auto s = read_touchstone_file(resolve(a.short_path));
  const auto o = read_touchstone_file(resolve(a.open_path));
  const auto l = read_touchstone_file(resolve(a.load_path));
  const auto t = read_touchstone_file(resolve(a.thru_path));
  if (o.freqs() != s.freqs() || l.freqs() != s.freqs())
    throw ParseError("calibration standards must share one frequency grid", 0);
  OnePortMeasurement p1, p2;
  p1.freqs = p2.freqs = s.freqs();
  for (std::size_t i = 0; i < s.size(); ++i) {
    p1.short_m.push_back(s[i].s11);
    p1.open_m.push_back(o[i].s11);
    p1.load_m.push_back(l[i].s11);
    p2.short_m.push_back(s[i].s22);
    p2.open_m.push_back(o[i].s22);
    p2.load_m.push_back(l[i].s22);
  }
  const auto boxes = solve_solr(solve_one_port(p1), solve_one_port(p2), t.resample(s.freqs()));
  write_output(a.common.out_dir, "error_boxes.json", to_json(boxes).dump(2) + "\n", out);
  std::size_t flagged = 0;
  if (a.dut_path) {
    const auto raw = read_touchstone_file(resolve(*a.dut_path));
    const auto r = deembed(raw.resample(s.freqs()), boxes);
    flagged = r.flagged.size();
    const std::string s2p = write_touchstone(r.dut);
    if (a.common.out_dir)
      write_output(a.common.out_dir, "dut_corrected.s2p", s2p, out);
    else
      out << s2p;
  }
  if (!a.common.quiet)
    out << "solved error boxes at " << s.size() << " frequencies\n";
  if (flagged > 0)
    throw SingularError("correction singular at " + std::to_string(flagged) + " frequencies");
  return kOk;
}

// protocol / replay -----------------------------------------------------

struct ProtocolArgs {
  Common common;
  std::string config;
  std::optional<std::uint64_t> seed;
  bool contrast = false;
  std::size_t contrast_index = 0;
};

void summarize(const CalibrationReport& r, std::ostream& out) {
  if (!r.added_noise) return;
  out << "freq_hz        N_add        sigma        quantum_limit\n";
  for (const auto& p : r.added_noise->points)
    out << fmt("%-14.6g ", p.freq.hz()) << fmt("%-12.6f ", p.n_add) << fmt("%-12.3g ", p.sigma_n_add)
        << fmt("%.6f", p.quantum_limit) << (p.negative_output ? "  (negative N_out)" : "") << "\n";
}

int cmd_protocol(const ProtocolArgs& a, std::ostream& out, std::ostream& err) {
  const json j = load_json(a.config, true);
  reject_unknown_keys(j, {"cryostat", "plan"}, "protocol config");
  if (!j.contains("plan")) throw ConfigError("protocol config: missing 'plan'");
  VirtualCryostatConfig cfg =
      j.contains("cryostat") ? cryostat_config_from_json(j.at("cryostat")) : VirtualCryostatConfig{};
  ProtocolPlan plan = plan_from_json(j.at("plan"));
  if (a.seed) cfg.seed = *a.seed;
  if (a.common.threads > 1) plan.threads = a.common.threads;

  RunLog log;
  CalibrationReport report;
  try {
    report = run_virtual_protocol(cfg, plan, &log);
  } catch (const ProtocolAborted& e) {
    write_output(a.common.out_dir, "report.json", to_json(e.report()).dump(2) + "\n", out);
    write_output(a.common.out_dir, "run_log.jsonl", log.to_jsonl(), out);
    err << "protocol aborted: " << e.what() << "\n";
    return kDiagnostic;
  }
  write_output(a.common.out_dir, "report.json", to_json(report).dump(2) + "\n", out);
  write_output(a.common.out_dir, "run_log.jsonl", log.to_jsonl(), out);
  write_output(a.common.out_dir, "results.csv",
               results_csv(*report.planck_fit, report.added_noise ? &*report.added_noise : nullptr), out);
  if (!a.common.out_dir) out << to_json(report).dump(2) << "\n";
  if (!a.common.quiet) summarize(report, out);

  if (a.contrast) {
    const SerialContrast c = serial_contrast(cfg, plan, a.contrast_index);
    const json cj = {{"freq_hz", c.freq.hz()},
                     {"n_add_true", c.n_add_true},
                     {"n_add_substitution", c.n_add_substitution},
                     {"n_add_serial", c.n_add_serial},
                     {"serial_noise_error", c.serial_noise_error},
                     {"predicted_noise_error", c.predicted_noise_error},
                     {"beta", c.beta}};
    write_output(a.common.out_dir, "contrast.json", cj.dump(2) + "\n", out);
    if (!a.common.quiet)
      out << "contrast at " << fmt("%g", c.freq.hz()) << " Hz: true " << fmt("%.6f", c.n_add_true)
          << ", substitution " << fmt("%.6f", c.n_add_substitution) << ", serial "
          << fmt("%.6f", c.n_add_serial) << "\n";
  }
  return kOk;
}

struct ReplayArgs {
  Common common;
  std::string report;
};

int cmd_replay(const ReplayArgs& a, std::ostream& out, std::ostream& err) {
  const ReplayResult r = replay(load_json(a.report, false));
  write_output(a.common.out_dir, "replayed.json", r.recomputed.dump(2) + "\n", out);
  if (r.ok()) {
    if (!a.common.quiet) out << "replay matches the stored results\n";
    return kOk;
  }
  for (const auto& m : r.mismatches) err << "mismatch: " << m << "\n";
  return kDiagnostic;
}

}  // namespace

fs::path data_dir() {
  if (const char* env = std::getenv("CRYONOISE_DATA_DIR"); env && *env) return env;
#ifdef CRYONOISE_DEFAULT_DATA_DIR
  return CRYONOISE_DEFAULT_DATA_DIR;
#else
  return "data/v1";
#endif
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cryonoise: cryogenic microwave noise metrology toolkit", "cryonoise"};
  app.require_subcommand(1);

  CascadeArgs cascade;
  auto* c = app.add_subcommand("cascade", "Thermal occupation along an attenuated input line");
  add_common(c, cascade.common);
  c->add_flag("--table1", cascade.table1, "Use the built-in seven-stage reference line");
  c->add_option("--config", cascade.config, "Chain JSON");
  c->add_option("--freq", cascade.freq, "Frequency in Hz")->check(CLI::PositiveNumber);

  PlanckArgs planck;
  auto* p = app.add_subcommand("planck-fit", "Fit G_sys and T_sys from a VTS temperature sweep");
  add_common(p, planck.common);
  p->add_option("--sweep", planck.sweep, "Sweep CSV (freq_hz, T_vts_K, psd_W_per_Hz)")->required();
  p->add_option("--source", planck.source, "'ideal' or a source .s2p file");

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth-sweep", "Generate a synthetic Planck sweep CSV");
  add_common(sy, synth.common);
  sy->add_option("--gsys-db", synth.g_sys_db);
  sy->add_option("--tsys", synth.t_sys);
  sy->add_option("--freq-start", synth.f_start)->check(CLI::PositiveNumber);
  sy->add_option("--freq-stop", synth.f_stop)->check(CLI::PositiveNumber);
  sy->add_option("--points", synth.points);
  sy->add_option("--t-min", synth.t_min)->check(CLI::NonNegativeNumber);
  sy->add_option("--t-max", synth.t_max)->check(CLI::NonNegativeNumber);
  sy->add_option("--temperatures", synth.temperatures);
  sy->add_option("--noise", synth.noise, "Relative Gaussian PSD noise")->check(CLI::NonNegativeNumber);
  sy->add_option("--seed", synth.seed);

  BiasArgs bias;
  auto* b = app.add_subcommand("bias", "Serial-configuration bias analysis");
  add_common(b, bias.common);
  b->add_option("--config", bias.config, "Serial bias config JSON (default: built-in)");
  b->add_option("--gain-db", bias.gain_db, "DUT gain of the built-in configuration");
  b->add_flag("--no-spurs", bias.no_spurs, "Drop intermodulation spurs");
  b->add_option("--noise-sigma", bias.noise_sigma, "Additive Gaussian noise on N_meas")
      ->check(CLI::NonNegativeNumber);
  b->add_option("--seed", bias.seed);

  SolrArgs solr;
  auto* s = app.add_subcommand("solr", "SOLR calibration from raw standard measurements");
  add_common(s, solr.common);
  s->add_option("--short", solr.short_path)->required();
  s->add_option("--open", solr.open_path)->required();
  s->add_option("--load", solr.load_path)->required();
  s->add_option("--thru", solr.thru_path, "Raw reciprocal standard")->required();
  s->add_option("--dut", solr.dut_path, "Raw DUT to correct");

  ProtocolArgs protocol;
  auto* pr = app.add_subcommand("protocol", "Run the calibration protocol on a virtual cryostat");
  add_common(pr, protocol.common);
  pr->add_option("--config", protocol.config, "JSON with 'cryostat' and 'plan'")->required();
  pr->add_option("--seed", protocol.seed);
  pr->add_flag("--contrast", protocol.contrast, "Also run the serial-topology contrast");
  pr->add_option("--contrast-index", protocol.contrast_index);

  ReplayArgs rep;
  auto* r = app.add_subcommand("replay", "Re-derive a stored report and compare");
  add_common(r, rep.common);
  r->add_option("--report", rep.report)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c->parsed()) return cmd_cascade(cascade, out);
    if (p->parsed()) return cmd_planck_fit(planck, out);
    if (sy->parsed()) return cmd_synth_sweep(synth, out);
    if (b->parsed()) return cmd_bias(bias, out);
    if (s->parsed()) return cmd_solr(solr, out);
    if (pr->parsed()) return cmd_protocol(protocol, out, err);
    if (r->parsed()) return cmd_replay(rep, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kData;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kData;
  } catch (const RangeError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const Error& e) {
    err << "diagnostic: " << e.what() << "\n";
    return kDiagnostic;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kData;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace cryonoise::cli
