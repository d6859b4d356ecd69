// Copyright 2026 The crosstrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-position delay statistics: mean estimation from uncorrelated span
// populations (difference of averages), parametric distribution fitting with
// goodness-of-fit gating, GMM fallback, and log-density evaluation.

#ifndef CROSSTRACE_DELAY_STATS_HPP_
#define CROSSTRACE_DELAY_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crosstrace/errors.hpp"
#include "crosstrace/jsonl.hpp"
#include "crosstrace/model.hpp"
#include "crosstrace/stats.hpp"

namespace crosstrace {

// Log-densities below this are clamped so score sums stay finite.
inline constexpr double kLogDensityFloor = -700.0;

struct DelayEstimate {
  int position = 0;        // 1-based delay slot, 1..n+1
  double mu_us = 0.0;      // estimated mean delay at this slot
  double total_mu_us = 0.0;  // estimated mean total delay across all slots
  std::size_t sample_count = 0;
};

enum class DelayFamily { normal, lognormal, exponential, gmm };

inline const char* to_string(DelayFamily f) {
  switch (f) {
    case DelayFamily::normal: return "normal";
    case DelayFamily::lognormal: return "lognormal";
    case DelayFamily::exponential: return "exponential";
    default: return "gmm";
  }
}

struct FitDiagnostics {
  double ks_stat = 0.0;
  double ks_pvalue = 0.0;
  double ad_stat = 0.0;
  double chi2_stat = 0.0;
  double chi2_pvalue = std::numeric_limits<double>::quiet_NaN();
  double bic = 0.0;
};

struct DelayModel {
  int position = 0;
  DelayFamily family = DelayFamily::normal;
  double mu = 0.0;     // normal mean | lognormal log-mean
  double sigma = 0.0;  // normal sd   | lognormal log-sd
  double rate = 0.0;   // exponential rate
  std::vector<stats::GmmComponent> components;  // gmm only
  int component_count = 0;                      // gmm only, C in 1..20
  FitDiagnostics diagnostics;
  double em_max_loglik_decrease = 0.0;  // 0 for parametric families
};

struct FitConfig {
  std::size_t min_samples = 30;
  double ks_alpha = 0.05;
  int gmm_max_components = 20;
  stats::GmmOptions gmm;
  std::uint64_t seed = 0x5eedf17;
};

// ---------------------------------------------------------------------------
// Mean estimation without known correlations
// ---------------------------------------------------------------------------

/// Estimates per-slot mean delays from the ingress population and the
/// per-position egress populations of one service, using the identity that
/// the average of differences equals the difference of averages. Slot
/// definitions: slot 1 compares first-egress starts with ingress starts,
/// middle slots compare egress starts with the previous position's ends, and
/// the last slot compares ingress ends with final-egress ends. Estimates are
/// taken as absolute differences.
inline std::vector<DelayEstimate> estimate_means(
    const std::vector<Span>& ingress, const std::vector<std::vector<Span>>& egress_by_position,
    const CallGraph& graph) {
  const std::size_t n_pos = static_cast<std::size_t>(graph.fanout());
  if (ingress.empty()) throw EstimationError("estimate_means: no ingress spans");
  if (egress_by_position.size() != n_pos)
    throw EstimationError("estimate_means: egress positions " +
                          std::to_string(egress_by_position.size()) + " != call graph fanout " +
                          std::to_string(n_pos));
  const std::size_t n = ingress.size();
  for (std::size_t k = 0; k < n_pos; ++k)
    if (egress_by_position[k].size() != n)
      throw EstimationError("estimate_means: position " + std::to_string(k + 1) + " has " +
                            std::to_string(egress_by_position[k].size()) + " egress spans, expected " +
                            std::to_string(n));

  auto sum_of = [](const std::vector<Span>& spans, auto field) {
    std::int64_t acc = 0;
    for (const auto& s : spans) acc += field(s);
    return acc;
  };
  auto starts = [](const Span& s) { return s.start_us; };
  auto ends = [](const Span& s) { return s.end_us; };

  std::int64_t ingress_start_sum = sum_of(ingress, starts);
  std::int64_t ingress_end_sum = sum_of(ingress, ends);

  std::vector<DelayEstimate> out;
  double total_mu = static_cast<double>(ingress_end_sum - ingress_start_sum);
  for (std::size_t k = 0; k < n_pos; ++k)
    total_mu -= static_cast<double>(sum_of(egress_by_position[k], ends) -
                                    sum_of(egress_by_position[k], starts));
  total_mu /= static_cast<double>(n);

  for (std::size_t k = 0; k + 1 <= n_pos + 1; ++k) {
    std::int64_t ref, base;
    if (n_pos == 0) {
      ref = ingress_end_sum;
      base = ingress_start_sum;
    } else if (k == 0) {
      ref = sum_of(egress_by_position[0], starts);
      base = ingress_start_sum;
    } else if (k < n_pos) {
      ref = sum_of(egress_by_position[k], starts);
      base = sum_of(egress_by_position[k - 1], ends);
    } else {
      ref = ingress_end_sum;
      base = sum_of(egress_by_position[n_pos - 1], ends);
    }
    DelayEstimate est;
    est.position = static_cast<int>(k) + 1;
    est.mu_us = std::fabs(static_cast<double>(ref - base)) / static_cast<double>(n);
    est.total_mu_us = total_mu;
    est.sample_count = n;
    out.push_back(est);
    if (n_pos == 0) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distribution fitting
// ---------------------------------------------------------------------------

namespace detail {

struct ParametricFit {
  DelayFamily family;
  double mu = 0.0, sigma = 0.0, rate = 0.0;
  int n_params = 0;
  double log_likelihood = 0.0;
  FitDiagnostics diag;
  bool feasible = false;
};

inline void fill_diagnostics(ParametricFit& fit, const std::vector<double>& sorted,
                             const stats::CdfFn& cdf) {
  fit.diag.ks_stat = stats::ks_statistic(sorted, cdf);
  fit.diag.ks_pvalue = stats::ks_pvalue(fit.diag.ks_stat, sorted.size());
  fit.diag.ad_stat = stats::anderson_darling_statistic(sorted, cdf);
  auto chi = stats::chi_square_test(sorted, cdf, fit.n_params);
  fit.diag.chi2_stat = chi.stat;
  fit.diag.chi2_pvalue = chi.pvalue;
  fit.diag.bic = stats::bic(fit.log_likelihood, fit.n_params, sorted.size());
}

}  // namespace detail

/// Fits normal, log-normal and exponential by maximum likelihood, gates on
/// the KS p-value, and picks the lowest-BIC family that passes. When no
/// parametric family fits, falls back to the lowest-BIC Gaussian mixture
/// with 1..gmm_max_components components.
inline DelayModel fit_model(const std::vector<double>& delays, int position,
                            const FitConfig& cfg = {}) {
  if (delays.size() < cfg.min_samples)
    throw FitError(FitError::Reason::too_few_samples,
                   "fit_model: " + std::to_string(delays.size()) + " samples < minimum " +
                       std::to_string(cfg.min_samples));
  std::vector<double> sorted = delays;
  std::sort(sorted.begin(), sorted.end());

  double mu = stats::mean(sorted);
  double var = stats::variance_mle(sorted, mu);
  if (var <= 0.0)
    throw FitError(FitError::Reason::zero_variance, "fit_model: zero-variance sample");
  bool all_positive = sorted.front() > 0.0;

  std::vector<detail::ParametricFit> fits;
  {
    detail::ParametricFit f;
    f.family = DelayFamily::normal;
    f.mu = mu;
    f.sigma = std::sqrt(var);
    f.n_params = 2;
    for (double d : sorted) f.log_likelihood += stats::normal_logpdf(d, f.mu, f.sigma);
    detail::fill_diagnostics(
        f, sorted, [&](double x) { return stats::normal_cdf(x, f.mu, f.sigma); });
    f.feasible = true;
    fits.push_back(f);
  }
  if (all_positive) {
    std::vector<double> logs(sorted.size());
    std::transform(sorted.begin(), sorted.end(), logs.begin(),
                   [](double v) { return std::log(v); });
    double lmu = stats::mean(logs);
    double lvar = stats::variance_mle(logs, lmu);
    if (lvar > 0.0) {
      detail::ParametricFit f;
      f.family = DelayFamily::lognormal;
      f.mu = lmu;
      f.sigma = std::sqrt(lvar);
      f.n_params = 2;
      for (double d : sorted) f.log_likelihood += stats::lognormal_logpdf(d, f.mu, f.sigma);
      detail::fill_diagnostics(
          f, sorted, [&](double x) { return stats::lognormal_cdf(x, f.mu, f.sigma); });
      f.feasible = true;
      fits.push_back(f);
    }
    {
      detail::ParametricFit f;
      f.family = DelayFamily::exponential;
      f.rate = 1.0 / mu;
      f.n_params = 1;
      for (double d : sorted) f.log_likelihood += stats::exponential_logpdf(d, f.rate);
      detail::fill_diagnostics(
          f, sorted, [&](double x) { return stats::exponential_cdf(x, f.rate); });
      f.feasible = true;
      fits.push_back(f);
    }
  }

  const detail::ParametricFit* chosen = nullptr;
  for (const auto& f : fits) {
    if (!f.feasible || f.diag.ks_pvalue < cfg.ks_alpha) continue;
    if (!chosen || f.diag.bic < chosen->diag.bic) chosen = &f;
  }
  if (chosen) {
    DelayModel m;
    m.position = position;
    m.family = chosen->family;
    m.mu = chosen->mu;
    m.sigma = chosen->sigma;
    m.rate = chosen->rate;
    m.diagnostics = chosen->diag;
    return m;
  }

  // GMM fallback: scan component counts, keep the lowest BIC.
  stats::GmmFit best;
  double best_bic = std::numeric_limits<double>::infinity();
  int best_c = 0;
  for (int c = 1; c <= cfg.gmm_max_components; ++c) {
    stats::GmmFit fit = stats::fit_gmm(sorted, c, cfg.seed + static_cast<std::uint64_t>(c), cfg.gmm);
    double b = stats::bic(fit.log_likelihood, 3 * c - 1, sorted.size());
    if (b < best_bic) {
      best_bic = b;
      best = fit;
      best_c = c;
    }
  }

  DelayModel m;
  m.position = position;
  m.family = DelayFamily::gmm;
  m.components = best.components;
  m.component_count = best_c;
  m.em_max_loglik_decrease = best.max_loglik_decrease;
  auto gmm_cdf = [&](double x) {
    double acc = 0.0;
    for (const auto& c : m.components)
      acc += c.weight * stats::normal_cdf(x, c.mean, std::sqrt(c.var));
    return acc;
  };
  m.diagnostics.ks_stat = stats::ks_statistic(sorted, gmm_cdf);
  m.diagnostics.ks_pvalue = stats::ks_pvalue(m.diagnostics.ks_stat, sorted.size());
  m.diagnostics.ad_stat = stats::anderson_darling_statistic(sorted, gmm_cdf);
  auto chi = stats::chi_square_test(sorted, gmm_cdf, 3 * best_c - 1);
  m.diagnostics.chi2_stat = chi.stat;
  m.diagnostics.chi2_pvalue = chi.pvalue;
  m.diagnostics.bic = best_bic;
  return m;
}

/// Natural-log density of delay d under the model, clamped to the floor so
/// sums over positions stay finite.
inline double log_density(const DelayModel& m, double d) {
  double v;
  switch (m.family) {
    case DelayFamily::normal: v = stats::normal_logpdf(d, m.mu, m.sigma); break;
    case DelayFamily::lognormal: v = stats::lognormal_logpdf(d, m.mu, m.sigma); break;
    case DelayFamily::exponential: v = stats::exponential_logpdf(d, m.rate); break;
    default: v = stats::gmm_logpdf(m.components, d); break;
  }
  if (!std::isfinite(v)) return kLogDensityFloor;
  return std::max(v, kLogDensityFloor);
}

// ---------------------------------------------------------------------------
// Model cache serialization (one document per position)
// ---------------------------------------------------------------------------

inline void write_models(const std::vector<DelayModel>& models, std::ostream& out) {
  for (const auto& m : models) {
    nlohmann::json params;
    switch (m.family) {
      case DelayFamily::normal: params = {{"mu", m.mu}, {"sigma", m.sigma}}; break;
      case DelayFamily::lognormal: params = {{"log_mu", m.mu}, {"log_sigma", m.sigma}}; break;
      case DelayFamily::exponential: params = {{"rate", m.rate}}; break;
      default: {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& c : m.components)
          comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"var", c.var}});
        params = {{"components", comps}};
        break;
      }
    }
    nlohmann::json diag = {{"ks_stat", m.diagnostics.ks_stat},
                           {"ks_pvalue", m.diagnostics.ks_pvalue},
                           {"ad_stat", m.diagnostics.ad_stat},
                           {"chi2_stat", m.diagnostics.chi2_stat},
                           {"bic", m.diagnostics.bic}};
    if (std::isfinite(m.diagnostics.chi2_pvalue)) diag["chi2_pvalue"] = m.diagnostics.chi2_pvalue;
    out << nlohmann::json{{"position", m.position},
                          {"family", to_string(m.family)},
                          {"component_count", m.component_count},
                          {"params", params},
                          {"diagnostics", diag}}
               .dump()
        << '\n';
  }
}

inline std::vector<DelayModel> read_models(std::istream& in) {
  std::vector<DelayModel> models;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json j = detail::parse_line(text, line);
    DelayModel m;
    m.position = detail::require<int>(j, "position", line);
    m.component_count = detail::require<int>(j, "component_count", line);
    auto family = detail::require<std::string>(j, "family", line);
    auto params = detail::require<nlohmann::json>(j, "params", line);
    if (family == "normal") {
      m.family = DelayFamily::normal;
      m.mu = detail::require<double>(params, "mu", line);
      m.sigma = detail::require<double>(params, "sigma", line);
    } else if (family == "lognormal") {
      m.family = DelayFamily::lognormal;
      m.mu = detail::require<double>(params, "log_mu", line);
      m.sigma = detail::require<double>(params, "log_sigma", line);
    } else if (family == "exponential") {
      m.family = DelayFamily::exponential;
      m.rate = detail::require<double>(params, "rate", line);
    } else if (family == "gmm") {
      m.family = DelayFamily::gmm;
      for (const auto& c : params.at("components")) {
        stats::GmmComponent comp;
        comp.weight = detail::require<double>(c, "weight", line);
        comp.mean = detail::require<double>(c, "mean", line);
        comp.var = detail::require<double>(c, "var", line);
        m.components.push_back(comp);
      }
    } else {
      throw ParseError(line, "unknown family '" + family + "'");
    }
    auto diag = detail::require<nlohmann::json>(j, "diagnostics", line);
    m.diagnostics.ks_stat = detail::require<double>(diag, "ks_stat", line);
    m.diagnostics.ks_pvalue = detail::require<double>(diag, "ks_pvalue", line);
    m.diagnostics.ad_stat = detail::require<double>(diag, "ad_stat", line);
    m.diagnostics.chi2_stat = detail::require<double>(diag, "chi2_stat", line);
    m.diagnostics.bic = detail::require<double>(diag, "bic", line);
    models.push_back(std::move(m));
  }
  return models;
}

}  // namespace crosstrace

#endif  // CROSSTRACE_DELAY_STATS_HPP_
