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

// Statistical primitives: maximum-likelihood fits for normal / log-normal /
// exponential, Kolmogorov-Smirnov / Anderson-Darling / Chi-square
// goodness-of-fit, BIC, and a 1-D Gaussian mixture fitted by EM with
// k-means++ initialization.

#ifndef CROSSTRACE_STATS_HPP_
#define CROSSTRACE_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace crosstrace::stats {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Maximum-likelihood (1/n) variance.
inline double variance_mle(const std::vector<double>& x, double mu) {
  double acc = 0.0;
  for (double v : x) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// Densities and CDFs
// ---------------------------------------------------------------------------

inline double normal_logpdf(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return -0.5 * kLogTwoPi - std::log(sigma) - 0.5 * z * z;
}

inline double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

inline double lognormal_logpdf(double x, double log_mu, double log_sigma) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  double z = (std::log(x) - log_mu) / log_sigma;
  return -std::log(x) - std::log(log_sigma) - 0.5 * kLogTwoPi - 0.5 * z * z;
}

inline double lognormal_cdf(double x, double log_mu, double log_sigma) {
  if (x <= 0.0) return 0.0;
  return normal_cdf(std::log(x), log_mu, log_sigma);
}

inline double exponential_logpdf(double x, double rate) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(rate) - rate * x;
}

inline double exponential_cdf(double x, double rate) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-rate * x);
}

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

using CdfFn = std::function<double(double)>;

/// One-sample KS statistic against a fully specified CDF. Input must be
/// sorted ascending.
inline double ks_statistic(const std::vector<double>& sorted, const CdfFn& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double f = cdf(sorted[i]);
    double hi = (static_cast<double>(i) + 1.0) / n - f;
    double lo = f - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

/// Asymptotic survival function of the Kolmogorov distribution with the
/// Stephens small-sample correction on the argument.
inline double ks_pvalue(double d, std::size_t n) {
  double sn = std::sqrt(static_cast<double>(n));
  double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * lambda * lambda * j * j);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Anderson-Darling statistic A^2 against a fully specified CDF (sorted input).
inline double anderson_darling_statistic(const std::vector<double>& sorted, const CdfFn& cdf) {
  const std::size_t n = sorted.size();
  const double eps = 1e-12;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double u = std::clamp(cdf(sorted[i]), eps, 1.0 - eps);
    double v = std::clamp(cdf(sorted[n - 1 - i]), eps, 1.0 - eps);
    s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(u) + std::log1p(-v));
  }
  return -static_cast<double>(n) - s / static_cast<double>(n);
}

namespace detail {

// Regularized incomplete gamma functions, series + continued fraction.
inline double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-14) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_cont_fraction(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-14) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Upper regularized incomplete gamma Q(a, x).
inline double gammq(double a, double x) {
  if (x < 0.0 || a <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_series(a, x);
  return detail::gamma_cont_fraction(a, x);
}

/// Survival function of the chi-square distribution.
inline double chi2_sf(double stat, double dof) { return gammq(dof / 2.0, stat / 2.0); }

struct ChiSquareResult {
  double stat = 0.0;
  double pvalue = std::numeric_limits<double>::quiet_NaN();
  int bins = 0;
  int dof = 0;
};

/// Chi-square GOF with Sturges binning over the sample range; adjacent bins
/// with expected count < 5 are merged. Outer bins absorb the tail mass.
inline ChiSquareResult chi_square_test(const std::vector<double>& sorted, const CdfFn& cdf,
                                       int n_params) {
  const std::size_t n = sorted.size();
  ChiSquareResult res;
  if (n < 2) return res;
  int k = static_cast<int>(std::ceil(1.0 + std::log2(static_cast<double>(n))));
  k = std::max(k, 2);
  double lo = sorted.front(), hi = sorted.back();
  if (hi <= lo) return res;
  double width = (hi - lo) / k;

  std::vector<double> observed(static_cast<std::size_t>(k), 0.0);
  for (double v : sorted) {
    int b = std::min(static_cast<int>((v - lo) / width), k - 1);
    observed[static_cast<std::size_t>(std::max(b, 0))] += 1.0;
  }
  std::vector<double> expected(static_cast<std::size_t>(k), 0.0);
  for (int b = 0; b < k; ++b) {
    double l = (b == 0) ? 0.0 : cdf(lo + width * b);
    double r = (b == k - 1) ? 1.0 : cdf(lo + width * (b + 1));
    expected[static_cast<std::size_t>(b)] = static_cast<double>(n) * std::max(r - l, 0.0);
  }

  // Merge left-to-right until each bin's expectation reaches 5.
  std::vector<double> obs_m, exp_m;
  double o_acc = 0.0, e_acc = 0.0;
  for (int b = 0; b < k; ++b) {
    o_acc += observed[static_cast<std::size_t>(b)];
    e_acc += expected[static_cast<std::size_t>(b)];
    if (e_acc >= 5.0) {
      obs_m.push_back(o_acc);
      exp_m.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (!exp_m.empty()) {
      obs_m.back() += o_acc;
      exp_m.back() += e_acc;
    } else {
      obs_m.push_back(o_acc);
      exp_m.push_back(e_acc);
    }
  }

  res.bins = static_cast<int>(exp_m.size());
  for (std::size_t b = 0; b < exp_m.size(); ++b) {
    if (exp_m[b] <= 0.0) continue;
    double diff = obs_m[b] - exp_m[b];
    res.stat += diff * diff / exp_m[b];
  }
  res.dof = res.bins - 1 - n_params;
  if (res.dof >= 1) res.pvalue = chi2_sf(res.stat, static_cast<double>(res.dof));
  return res;
}

inline double bic(double log_likelihood, int n_params, std::size_t n) {
  return static_cast<double>(n_params) * std::log(static_cast<double>(n)) - 2.0 * log_likelihood;
}

// ---------------------------------------------------------------------------
// 1-D Gaussian mixture via EM
// ---------------------------------------------------------------------------

struct GmmComponent {
  double weight = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

struct GmmFit {
  std::vector<GmmComponent> components;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double max_loglik_decrease = 0.0;  // largest observed drop between EM iterations
};

struct GmmOptions {
  int restarts = 10;
  int max_iterations = 200;
  double rel_tolerance = 1e-6;
  double var_floor_scale = 1e-6;  // floor = scale * sample variance
};

inline double gmm_logpdf(const std::vector<GmmComponent>& comps, double x) {
  double best = -std::numeric_limits<double>::infinity();
  thread_local std::vector<double> terms;
  terms.clear();
  for (const auto& c : comps) {
    double t = (c.weight > 0.0 && c.var > 0.0)
                   ? std::log(c.weight) + normal_logpdf(x, c.mean, std::sqrt(c.var))
                   : -std::numeric_limits<double>::infinity();
    terms.push_back(t);
    best = std::max(best, t);
  }
  if (!std::isfinite(best)) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double t : terms) {
    double d = t - best;
    if (d > -40.0) sum += std::exp(d);
  }
  return best + std::log(sum);
}

namespace detail {

inline std::vector<double> kmeans_pp_centers(const std::vector<double>& x, int k,
                                             std::mt19937_64& rng) {
  std::vector<double> centers;
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  centers.push_back(x[pick(rng)]);
  std::vector<double> d2(x.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(x[pick(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    double acc = 0.0;
    std::size_t chosen = x.size() - 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += d2[i];
      if (acc >= target) {
        chosen = i;
        break;
      }
    }
    centers.push_back(x[chosen]);
  }
  return centers;
}

inline GmmFit em_run(const std::vector<double>& x, int k, std::mt19937_64& rng,
                     const GmmOptions& opt, double var_floor) {
  const std::size_t n = x.size();
  auto centers = kmeans_pp_centers(x, k, rng);

  // A few Lloyd iterations sharpen the seeding before EM takes over.
  std::vector<int> assign(n, 0);
  for (int it = 0; it < 8; ++it) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        double d = (x[i] - centers[static_cast<std::size_t>(j)]) *
                   (x[i] - centers[static_cast<std::size_t>(j)]);
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        moved = true;
      }
    }
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> cnt(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[static_cast<std::size_t>(assign[i])] += x[i];
      cnt[static_cast<std::size_t>(assign[i])] += 1;
    }
    for (int j = 0; j < k; ++j)
      if (cnt[static_cast<std::size_t>(j)] > 0)
        centers[static_cast<std::size_t>(j)] =
            sum[static_cast<std::size_t>(j)] / static_cast<double>(cnt[static_cast<std::size_t>(j)]);
    if (!moved) break;
  }

  GmmFit fit;
  fit.components.resize(static_cast<std::size_t>(k));
  {
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0), sq(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> cnt(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto j = static_cast<std::size_t>(assign[i]);
      sum[j] += x[i];
      sq[j] += x[i] * x[i];
      cnt[j] += 1;
    }
    for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
      double cj = static_cast<double>(std::max<std::size_t>(cnt[j], 1));
      double m = (cnt[j] > 0) ? sum[j] / cj : centers[j];
      double v = (cnt[j] > 0) ? sq[j] / cj - m * m : var_floor;
      fit.components[j] = {std::max(cj / static_cast<double>(n), 1e-9), m,
                           std::max(v, var_floor)};
    }
  }

  std::vector<double> resp(static_cast<std::size_t>(k));
  std::vector<double> r_sum(static_cast<std::size_t>(k)), rx(static_cast<std::size_t>(k)),
      rxx(static_cast<std::size_t>(k));
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int it = 0; it < opt.max_iterations; ++it) {
    std::fill(r_sum.begin(), r_sum.end(), 0.0);
    std::fill(rx.begin(), rx.end(), 0.0);
    std::fill(rxx.begin(), rxx.end(), 0.0);
    double ll = 0.0;

    // Cache per-component constants for the E-step.
    std::vector<double> logw(static_cast<std::size_t>(k)), inv2v(static_cast<std::size_t>(k)),
        lognorm(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
      const auto& c = fit.components[j];
      logw[j] = std::log(c.weight);
      inv2v[j] = 0.5 / c.var;
      lognorm[j] = -0.5 * kLogTwoPi - 0.5 * std::log(c.var);
    }

    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
        double d = x[i] - fit.components[j].mean;
        resp[j] = logw[j] + lognorm[j] - d * d * inv2v[j];
        best = std::max(best, resp[j]);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
        double d = resp[j] - best;
        resp[j] = (d > -40.0) ? std::exp(d) : 0.0;
        denom += resp[j];
      }
      ll += best + std::log(denom);
      double inv = 1.0 / denom;
      for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
        double r = resp[j] * inv;
        if (r <= 0.0) continue;
        r_sum[j] += r;
        rx[j] += r * x[i];
        rxx[j] += r * x[i] * x[i];
      }
    }

    fit.iterations = it + 1;
    if (std::isfinite(prev_ll)) {
      double drop = prev_ll - ll;
      fit.max_loglik_decrease = std::max(fit.max_loglik_decrease, drop);
      if (std::fabs(ll - prev_ll) < opt.rel_tolerance * std::fabs(ll)) {
        fit.log_likelihood = ll;
        fit.converged = true;
        break;
      }
    }
    prev_ll = ll;
    fit.log_likelihood = ll;

    double w_total = 0.0;
    for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
      if (r_sum[j] > 1e-10) {
        double m = rx[j] / r_sum[j];
        fit.components[j].mean = m;
        fit.components[j].var = std::max(rxx[j] / r_sum[j] - m * m, var_floor);
      }
      fit.components[j].weight = std::max(r_sum[j] / static_cast<double>(n), 1e-12);
      w_total += fit.components[j].weight;
    }
    for (auto& c : fit.components) c.weight /= w_total;
  }
  return fit;
}

}  // namespace detail

/// Fits a k-component 1-D Gaussian mixture; best of opt.restarts EM runs.
inline GmmFit fit_gmm(const std::vector<double>& x, int k, std::uint64_t seed,
                      const GmmOptions& opt = {}) {
  double mu = mean(x);
  double var = variance_mle(x, mu);
  double floor = std::max(opt.var_floor_scale * var, 1e-12);
  std::mt19937_64 rng(seed);
  GmmFit best;
  for (int r = 0; r < opt.restarts; ++r) {
    GmmFit fit = detail::em_run(x, k, rng, opt, floor);
    if (fit.log_likelihood > best.log_likelihood) best = fit;
  }
  // Canonical order: components sorted by mean.
  std::sort(best.components.begin(), best.components.end(),
            [](const GmmComponent& a, const GmmComponent& b) { return a.mean < b.mean; });
  return best;
}

}  // namespace crosstrace::stats

#endif  // CROSSTRACE_STATS_HPP_
