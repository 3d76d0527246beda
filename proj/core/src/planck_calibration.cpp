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

#include "cryonoise/planck_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "cryonoise/error.hpp"
#include "cryonoise/json_util.hpp"
#include "cryonoise/parallel.hpp"

namespace cryonoise {
namespace {

using constants::boltzmann;

std::string hz(Frequency f) {
  std::ostringstream os;
  os.precision(12);
  os << f.hz() << " Hz";
  return os.str();
}

PlanckFitPoint fit_one(const PlanckSweep& sweep, std::size_t j) {
  const Frequency f = sweep.grid[j];
  const double hf = f.photon_energy();
  const std::size_t n = sweep.records.size();
  const bool weighted = !sweep.variances.empty();

  std::vector<double> x(n), y(n), w(n, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double n_src = planck_occupation(f, sweep.records[k].temperature);
    x[k] = sweep.source ? source_output_occupation(*sweep.source, n_src, f) : n_src;
    y[k] = sweep.records[k].psd[j] / hf;
    if (weighted) {
      const double var = sweep.variances[k][j];
      if (!(var > 0.0)) throw DomainError("sweep variances must be positive");
      w[k] = (hf * hf) / var;
    }
  }

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sw += w[k];
    sx += w[k] * x[k];
    sy += w[k] * y[k];
  }
  const double xm = sx / sw;
  const double ym = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += w[k] * (x[k] - xm) * (x[k] - xm);
    sxy += w[k] * (x[k] - xm) * (y[k] - ym);
  }
  if (!(sxx > 0.0))
    throw DomainError("Planck fit at " + hz(f) +
                      " is underdetermined: source occupation does not vary over the sweep");

  // y = a x + c, a = G_sys, c = G_sys k_B T_sys / hf.
  const double a = sxy / sxx;
  const double c = ym - a * xm;

  double wrss = 0.0, rss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - (a * x[k] + c);
    wrss += w[k] * r * r;
    rss += r * r;
  }
  const std::size_t dof = n - 2;
  const double s2 = dof > 0 ? wrss / static_cast<double>(dof) : 0.0;
  const double var_a = s2 / sxx;
  const double var_c = s2 * (1.0 / sw + xm * xm / sxx);
  const double cov_ac = -s2 * xm / sxx;

  const double theta = c / a;  // k_B T_sys / hf
  const double var_theta =
      var_c / (a * a) + c * c * var_a / (a * a * a * a) - 2.0 * c * cov_ac / (a * a * a);
  const double cov_a_theta = cov_ac / a - c * var_a / (a * a);
  const double t_scale = hf / boltzmann;

  PlanckFitPoint p;
  p.freq = f;
  p.gain = a;
  p.noise_temperature = theta * t_scale;
  p.sigma_gain = std::sqrt(std::max(var_a, 0.0));
  p.sigma_noise_temperature = std::sqrt(std::max(var_theta, 0.0)) * t_scale;
  p.covariance = cov_a_theta * t_scale;
  p.residual_rms = std::sqrt(rss / static_cast<double>(n)) * hf;
  p.points = n;
  p.dof = dof;
  p.nonpositive_gain = !(a > 0.0);
  p.negative_noise_temperature = p.noise_temperature < 0.0;
  return p;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front()))) cell.remove_prefix(1);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) cell.remove_suffix(1);
    out.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double cell_number(const std::string& s, std::size_t lineno) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", lineno);
  }
}

void append_g(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

void PlanckSweep::validate() const {
  if (grid.empty()) throw DomainError("Planck sweep: empty frequency grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("Planck sweep: grid must be ascending");
  std::set<double> temps;
  for (const auto& r : records) {
    if (!(r.temperature >= 0.0)) throw DomainError("Planck sweep: negative temperature");
    if (r.psd.size() != grid.size())
      throw DomainError("Planck sweep: every record needs one PSD per grid frequency");
    for (double s : r.psd)
      if (!(s > 0.0)) throw DomainError("Planck sweep: PSD values must be positive");
    temps.insert(r.temperature);
  }
  if (temps.size() < 2)
    throw DomainError("Planck sweep is underdetermined: need at least 2 distinct temperatures, got " +
                      std::to_string(temps.size()));
  if (!variances.empty()) {
    if (variances.size() != records.size())
      throw DomainError("Planck sweep: variances must match records");
    for (const auto& v : variances)
      if (v.size() != grid.size()) throw DomainError("Planck sweep: variances must match grid");
  }
  if (source) (void)source->sparams.resample(grid);  // RangeError if not covered
}

bool PlanckFitResult::ok() const {
  return std::none_of(points.begin(), points.end(),
                      [](const PlanckFitPoint& p) { return p.nonpositive_gain; });
}

ReadoutChainParams PlanckFitResult::to_readout_chain() const {
  ReadoutChainParams c;
  for (const auto& p : points) {
    c.freqs.push_back(p.freq);
    c.gain.push_back(p.gain);
    c.noise_temperature.push_back(p.noise_temperature);
    c.sigma_gain.push_back(p.sigma_gain);
    c.sigma_noise_temperature.push_back(p.sigma_noise_temperature);
  }
  return c;
}

PlanckFitResult fit_planck(const PlanckSweep& sweep, const FitOptions& opts) {
  sweep.validate();
  PlanckFitResult result;
  result.points.resize(sweep.grid.size());
  parallel_for(sweep.grid.size(), opts.threads,
               [&](std::size_t j) { result.points[j] = fit_one(sweep, j); });
  return result;
}

ChainPoint y_factor(PsdPoint hot, PsdPoint cold, Frequency f) {
  if (!(hot.temperature > cold.temperature))
    throw DomainError("Y-factor requires T_hot > T_cold");
  const double hf = f.photon_energy();
  const double xh = planck_occupation(f, hot.temperature);
  const double xc = planck_occupation(f, cold.temperature);
  const double a = (hot.psd - cold.psd) / hf / (xh - xc);
  const double c = hot.psd / hf - a * xh;
  return {a, c / a * hf / boltzmann};
}

ReadoutChainParams extract_substitution(const PlanckFitResult& chain_fit, double path_transmission) {
  std::vector<double> a(chain_fit.points.size(), path_transmission);
  return extract_substitution(chain_fit, a);
}

ReadoutChainParams extract_substitution(const PlanckFitResult& chain_fit,
                                        std::span<const double> path_transmission) {
  if (path_transmission.size() != chain_fit.points.size())
    throw DomainError("extract_substitution: one transmission per frequency required");
  ReadoutChainParams out;
  for (std::size_t i = 0; i < chain_fit.points.size(); ++i) {
    const double a = path_transmission[i];
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("path transmission A_s must lie in (0, 1]");
    const auto& p = chain_fit.points[i];
    const double t_scale = p.freq.photon_energy() / boltzmann;
    const double n_eff = p.noise_temperature / t_scale;  // N~_sys
    out.freqs.push_back(p.freq);
    out.gain.push_back(p.gain / a);
    out.noise_temperature.push_back(t_scale * (a * n_eff - 0.5 * (1.0 - a)));
    out.sigma_gain.push_back(p.sigma_gain / a);
    out.sigma_noise_temperature.push_back(a * p.sigma_noise_temperature);
  }
  return out;
}

AddedNoiseResult extract_added_noise(const AddedNoiseInputs& in, const ReadoutChainParams& chain) {
  chain.validate();
  const std::size_t n = chain.size();
  if (in.psd.size() != n || in.gain.size() != n)
    throw DomainError("extract_added_noise: PSD and gain must match the chain grid");
  if (!in.n_in.empty() && in.n_in.size() != n)
    throw DomainError("extract_added_noise: N_in must match the chain grid");
  if ((!in.sigma_psd.empty() && in.sigma_psd.size() != n) ||
      (!in.sigma_gain.empty() && in.sigma_gain.size() != n))
    throw DomainError("extract_added_noise: uncertainty vectors must match the chain grid");

  AddedNoiseResult r;
  r.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = in.gain[i];
    if (!(g > 0.0)) throw DomainError("extract_added_noise: DUT gain must be positive");
    const double hf = chain.freqs[i].photon_energy();
    const double gs = chain.gain[i];
    const double ts = chain.noise_temperature[i];
    const double psd = in.psd[i];
    const double n_in = in.n_in.empty() ? 0.5 : in.n_in[i];

    AddedNoisePoint p;
    p.freq = chain.freqs[i];
    p.gain_sys = gs;
    p.noise_temperature = ts;
    p.sigma_gain_sys = chain.sigma_gain.empty() ? 0.0 : chain.sigma_gain[i];
    p.sigma_noise_temperature =
        chain.sigma_noise_temperature.empty() ? 0.0 : chain.sigma_noise_temperature[i];
    p.n_out = (psd / gs - boltzmann * ts) / hf;
    p.n_add = p.n_out / g - n_in;
    p.gain = g;
    p.quantum_limit = quantum_limit(g);
    p.negative_output = p.n_out < 0.0;

    const double d_gs = -psd / (gs * gs * hf * g);
    const double d_ts = -boltzmann / (hf * g);
    const double d_psd = 1.0 / (gs * hf * g);
    const double d_g = -p.n_out / (g * g);
    const double s_psd = in.sigma_psd.empty() ? 0.0 : in.sigma_psd[i];
    const double s_g = in.sigma_gain.empty() ? 0.0 : in.sigma_gain[i];
    p.sigma_n_add = std::sqrt(std::pow(d_gs * p.sigma_gain_sys, 2) +
                              std::pow(d_ts * p.sigma_noise_temperature, 2) +
                              std::pow(d_psd * s_psd, 2) + std::pow(d_g * s_g, 2));
    r.points.push_back(p);
  }
  return r;
}

double AddedNoiseResult::band_average(Frequency lo, Frequency hi) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : points) {
    if (p.freq >= lo && p.freq <= hi) {
      sum += p.n_add;
      ++count;
    }
  }
  if (count == 0) throw RangeError("band average: no grid points inside the band");
  return sum / static_cast<double>(count);
}

PlanckSweep parse_sweep_csv(std::string_view text) {
  PlanckSweep sweep;
  std::size_t lineno = 0, pos = 0;
  int col_f = -1, col_t = -1, col_s = -1;
  std::size_t ncols = 0;
  bool header = false;
  std::vector<Frequency> current_freqs;
  SweepRecord current;
  bool have_current = false;
  std::size_t record_line = 0;

  auto flush = [&] {
    if (!have_current) return;
    if (sweep.records.empty()) {
      for (std::size_t i = 1; i < current_freqs.size(); ++i)
        if (!(current_freqs[i] > current_freqs[i - 1]))
          throw ParseError("frequencies within a record must be strictly ascending", record_line);
      sweep.grid = current_freqs;
    } else if (current_freqs != sweep.grid) {
      throw ParseError("record at T = " + std::to_string(current.temperature) +
                           " K does not cover the same frequencies as the first record",
                       record_line);
    }
    sweep.records.push_back(std::move(current));
    current = {};
    current_freqs.clear();
    have_current = false;
  };

  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;
    auto cells = split_csv(line);
    if (!header) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c] == "freq_hz") col_f = static_cast<int>(c);
        else if (cells[c] == "T_vts_K") col_t = static_cast<int>(c);
        else if (cells[c] == "psd_W_per_Hz") col_s = static_cast<int>(c);
      }
      if (col_f < 0) throw ParseError("missing column 'freq_hz'", lineno);
      if (col_t < 0) throw ParseError("missing column 'T_vts_K'", lineno);
      if (col_s < 0) throw ParseError("missing column 'psd_W_per_Hz'", lineno);
      ncols = cells.size();
      header = true;
      continue;
    }
    if (cells.size() != ncols)
      throw ParseError("expected " + std::to_string(ncols) + " columns, found " +
                           std::to_string(cells.size()),
                       lineno);
    const double f = cell_number(cells[col_f], lineno);
    const double t = cell_number(cells[col_t], lineno);
    const double s = cell_number(cells[col_s], lineno);
    if (!(f > 0.0)) throw ParseError("frequency must be positive", lineno);
    if (!(t >= 0.0)) throw ParseError("temperature must be non-negative", lineno);
    if (!std::isfinite(s)) throw ParseError("PSD must be finite", lineno);
    if (have_current && t != current.temperature) flush();
    if (!have_current) {
      record_line = lineno;
      current.temperature = t;
      have_current = true;
    }
    current_freqs.emplace_back(f);
    current.psd.push_back(s);
  }
  if (!header) throw ParseError("empty sweep file: missing header", lineno);
  flush();
  return sweep;
}

std::string write_sweep_csv(const PlanckSweep& sweep) {
  std::string out = "freq_hz,T_vts_K,psd_W_per_Hz\n";
  for (const auto& r : sweep.records) {
    for (std::size_t j = 0; j < sweep.grid.size(); ++j) {
      append_g(out, sweep.grid[j].hz());
      out += ',';
      append_g(out, r.temperature);
      out += ',';
      append_g(out, r.psd[j]);
      out += '\n';
    }
  }
  return out;
}

std::string results_csv(const PlanckFitResult& fit, const AddedNoiseResult* noise) {
  std::string out =
      "freq_hz,gsys_linear,gsys_db,tsys_K,sigma_gsys,sigma_tsys,n_out,n_add,sigma_n_add,"
      "quantum_limit\n";
  for (std::size_t i = 0; i < fit.points.size(); ++i) {
    const auto& p = fit.points[i];
    for (double v : {p.freq.hz(), p.gain, 10.0 * std::log10(p.gain), p.noise_temperature,
                     p.sigma_gain, p.sigma_noise_temperature}) {
      append_g(out, v);
      out += ',';
    }
    if (noise && i < noise->points.size()) {
      const auto& q = noise->points[i];
      append_g(out, q.n_out);
      out += ',';
      append_g(out, q.n_add);
      out += ',';
      append_g(out, q.sigma_n_add);
      out += ',';
      append_g(out, q.quantum_limit);
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const PlanckFitResult& fit) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : fit.points) {
    pts.push_back({{"freq_hz", p.freq.hz()},
                   {"gsys_linear", p.gain},
                   {"gsys_db", 10.0 * std::log10(p.gain)},
                   {"tsys_K", p.noise_temperature},
                   {"sigma_gsys", p.sigma_gain},
                   {"sigma_tsys", p.sigma_noise_temperature},
                   {"cov_gsys_tsys", p.covariance},
                   {"residual_rms", p.residual_rms},
                   {"points", p.points},
                   {"dof", p.dof},
                   {"nonpositive_gain", p.nonpositive_gain},
                   {"negative_tsys", p.negative_noise_temperature}});
  }
  return {{"points", std::move(pts)}};
}

PlanckFitResult planck_fit_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"points"}, "Planck fit");
  PlanckFitResult r;
  for (const auto& p : j.at("points")) {
    PlanckFitPoint q;
    q.freq = Frequency(required<double>(p, "freq_hz", "Planck fit point"));
    q.gain = required<double>(p, "gsys_linear", "Planck fit point");
    q.noise_temperature = required<double>(p, "tsys_K", "Planck fit point");
    q.sigma_gain = value_or(p, "sigma_gsys", 0.0);
    q.sigma_noise_temperature = value_or(p, "sigma_tsys", 0.0);
    q.covariance = value_or(p, "cov_gsys_tsys", 0.0);
    q.residual_rms = value_or(p, "residual_rms", 0.0);
    q.points = value_or<std::size_t>(p, "points", 0);
    q.dof = value_or<std::size_t>(p, "dof", 0);
    q.nonpositive_gain = value_or(p, "nonpositive_gain", false);
    q.negative_noise_temperature = value_or(p, "negative_tsys", false);
    r.points.push_back(q);
  }
  return r;
}

nlohmann::json to_json(const AddedNoiseResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"freq_hz", p.freq.hz()},
                   {"gsys_linear", p.gain_sys},
                   {"tsys_K", p.noise_temperature},
                   {"sigma_gsys", p.sigma_gain_sys},
                   {"sigma_tsys", p.sigma_noise_temperature},
                   {"gain", p.gain},
                   {"n_out", p.n_out},
                   {"n_add", p.n_add},
                   {"sigma_n_add", p.sigma_n_add},
                   {"quantum_limit", p.quantum_limit},
                   {"negative_output", p.negative_output}});
  }
  return {{"points", std::move(pts)}};
}

}  // namespace cryonoise
