#include "asymloss/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "asymloss/error.hpp"
#include "asymloss/rng.hpp"

namespace asymloss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-12;
constexpr std::size_t kLeakageResolution = 200;

void check_amse_params(double q, double a) {
  if (!std::isfinite(q) || q <= 0.0) raise(ErrorKind::config, "q must be positive");
  if (!std::isfinite(a) || a < 1.0) raise(ErrorKind::config, "a must be >= 1");
}

// (b + d)^q - b^q without cancellation; b >= 0, b + d >= 0.
double pow_rise(double b, double d, double q) {
  if (b == 0.0) return std::pow(d, q);
  return std::pow(b, q) * std::expm1(q * std::log1p(d / b));
}

// S = sum_{i != t, n} w_i / w_n.
double rest_ratio(const AsymmetryWeights& w, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i != w.t.index && i != n) s += w.w[i];
  }
  return s / w.w[n];
}

// h at x = 1 - d; NaN where the denominator is not positive.
double h_of_gap(double d, double q, double a, double S) {
  const double one_minus = -pow_rise(1.0, -d, q);  // 1 - (1-d)^q
  const double dq = std::pow(d, q);
  const double numer = -pow_rise(a, -d, q) + one_minus + S * (one_minus - dq);
  const double denom = pow_rise(a - 1.0, d, q) + dq;
  if (!(denom > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return numer / denom;
}

double weighted_risk(const LossSpec& spec, const AsymmetryWeights& w, const ProbVector& p) {
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w.w[k] == 0.0) continue;
    total += w.w[k] * loss_value(spec, p, ClassLabel{k});
  }
  return total;
}

struct Search {
  const LossSpec& spec;
  const AsymmetryWeights& weights;
  std::vector<double> best;
  double best_value = kInf;
  std::size_t points = 0;

  void offer(const std::vector<double>& p) {
    ++points;
    const double v = weighted_risk(spec, weights, ProbVector::trusted(p));
    if (best.empty() || v < best_value - kTieTolerance * std::max(1.0, std::abs(best_value))) {
      best_value = v;
      best = p;
    }
  }
};

void enumerate(Search& s, std::vector<std::size_t>& counts, std::size_t pos, std::size_t remaining,
               std::size_t r, std::vector<double>& p) {
  const std::size_t K = counts.size();
  if (pos + 1 == K) {
    counts[pos] = remaining;
    for (std::size_t k = 0; k < K; ++k) p[k] = static_cast<double>(counts[k]) / static_cast<double>(r);
    s.offer(p);
    return;
  }
  for (std::size_t c = 0; c <= remaining; ++c) {
    counts[pos] = c;
    enumerate(s, counts, pos + 1, remaining - c, r, p);
  }
}

}  // namespace

AsymmetryWeights AsymmetryWeights::make(std::vector<double> w, ClassLabel t) {
  if (w.size() < 2) raise(ErrorKind::config, "weights need at least 2 classes");
  if (t.index >= w.size()) raise(ErrorKind::config, "dominant index out of range");
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) raise(ErrorKind::config, "weights must be finite and non-negative");
  }
  AsymmetryWeights out{std::move(w), t};
  const double wn = out.w[out.runner_up()];
  if (!(out.w[t.index] > wn)) {
    raise(ErrorKind::dominance, "weight " + std::to_string(t.index) + " is not strictly dominant");
  }
  return out;
}

AsymmetryWeights AsymmetryWeights::dominant(std::vector<double> w) {
  if (w.empty()) raise(ErrorKind::config, "empty weight vector");
  const auto it = std::max_element(w.begin(), w.end());
  const ClassLabel t{static_cast<std::size_t>(it - w.begin())};
  return make(std::move(w), t);
}

std::size_t AsymmetryWeights::runner_up() const {
  std::size_t n = t.index == 0 ? 1 : 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i != t.index && w[i] > w[n]) n = i;
  }
  return n;
}

double AsymmetryWeights::ratio() const {
  const double wn = w[runner_up()];
  return wn == 0.0 ? kInf : w[t.index] / wn;
}

double theorem_threshold(double q, double a, const AsymmetryWeights& weights) {
  check_amse_params(q, a);
  const std::size_t n = weights.runner_up();
  const double wn = weights.w[n];
  if (wn == 0.0) return 0.0;
  if (q <= 1.0) return 1.0;
  if (a == 1.0) {
    raise(ErrorKind::unsatisfiable, "q > 1 with a = 1 gives an infinite threshold");
  }
  double others = 0.0;  // sum_{i != t} w_i / w_n
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (i != weights.t.index) others += weights.w[i] / wn;
  }
  return (std::pow(a, q - 1.0) + others) / std::pow(a - 1.0, q - 1.0);
}

bool theorem_satisfied(double q, double a, const AsymmetryWeights& weights) {
  try {
    return weights.ratio() >= theorem_threshold(q, a, weights) - kThresholdTolerance;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::unsatisfiable) return false;
    throw;
  }
}

double sup_h(double q, double a, const AsymmetryWeights& weights, std::size_t grid) {
  check_amse_params(q, a);
  if (grid < 1000) raise(ErrorKind::config, "sup_h grid must have at least 1000 points");
  const std::size_t n = weights.runner_up();
  if (weights.w[n] == 0.0) return 0.0;
  const double S = rest_ratio(weights, n);
  auto h = [&](double d) { return h_of_gap(d, q, a, S); };

  const double step = 1.0 / static_cast<double>(grid);
  double best = -kInf;
  std::size_t best_i = 0;
  for (std::size_t i = 1; i <= grid; ++i) {
    const double v = h(static_cast<double>(i) * step);
    if (std::isnan(v)) continue;
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  if (best_i == 0) raise(ErrorKind::numeric, "h(x) has no valid grid point");

  if (best_i == 1) {
    // Supremum sits at the removable endpoint x -> 1; walk toward it.
    for (int j = 1; j <= 12; ++j) {
      const double v = h(step * std::pow(10.0, -j));
      if (!std::isnan(v)) best = std::max(best, v);
    }
    return best;
  }

  double lo = static_cast<double>(best_i - 1) * step;
  double hi = std::min(1.0, static_cast<double>(best_i + 1) * step);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = h(x1);
  double f2 = h(x2);
  for (int it = 0; it < 100; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = h(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = h(x1);
    }
  }
  for (double v : {f1, f2}) {
    if (!std::isnan(v)) best = std::max(best, v);
  }
  return best;
}

OracleResult oracle_minimize(const LossSpec& spec, const AsymmetryWeights& weights,
                             std::size_t resolution) {
  spec.validate();
  if (resolution < 10) raise(ErrorKind::config, "oracle resolution must be at least 10");
  const std::size_t K = weights.size();
  const std::size_t t = weights.t.index;

  Search search{spec, weights, {}, kInf, 0};
  std::vector<double> vertex(K, 0.0);
  vertex[t] = 1.0;
  search.offer(vertex);
  const double vertex_value = search.best_value;

  std::vector<double> p(K, 0.0);
  if (K <= 4) {
    std::vector<std::size_t> counts(K, 0);
    enumerate(search, counts, 0, resolution, resolution, p);
  } else {
    const std::size_t n = weights.runner_up();
    const double r = static_cast<double>(resolution);
    for (std::size_t i = 0; i <= resolution; ++i) {
      std::fill(p.begin(), p.end(), 0.0);
      p[t] = static_cast<double>(i) / r;
      p[n] = static_cast<double>(resolution - i) / r;
      search.offer(p);
    }
    const std::size_t lr = std::min(resolution, kLeakageResolution);
    const double spread = 1.0 / static_cast<double>(K - 2);
    for (std::size_t i = 0; i < lr; ++i) {
      for (std::size_t j = 0; i + j < lr; ++j) {
        const double pt = static_cast<double>(i) / static_cast<double>(lr);
        const double pn = static_cast<double>(j) / static_cast<double>(lr);
        const double rest = (1.0 - pt - pn) * spread;
        for (std::size_t k = 0; k < K; ++k) p[k] = rest;
        p[t] = pt;
        p[n] = pn;
        search.offer(p);
      }
    }
  }

  OracleResult out;
  out.cell = 1.0 / static_cast<double>(resolution);
  out.points = search.points;
  out.objective = search.best_value;
  out.vertex_objective = vertex_value;
  double dist = 0.0;
  for (std::size_t k = 0; k < K; ++k) dist = std::max(dist, std::abs(search.best[k] - vertex[k]));
  out.is_dominant_vertex = dist <= out.cell * (1.0 + 1e-9);
  out.argmin = ProbVector::trusted(std::move(search.best));
  return out;
}

AsymmetryVerdict verify_amse(double q, double a, const AsymmetryWeights& weights,
                             std::size_t resolution, std::size_t sup_grid) {
  AsymmetryVerdict v;
  try {
    v.required_ratio = theorem_threshold(q, a, weights);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::unsatisfiable) throw;
    v.required_ratio = kInf;
  }
  v.actual_ratio = weights.ratio();
  v.theorem_satisfied = theorem_satisfied(q, a, weights);
  v.sup_h = sup_h(q, a, weights, sup_grid);
  const OracleResult oracle = oracle_minimize(LossSpec::amse(a, q), weights, resolution);
  v.oracle_argmin = oracle.argmin;
  v.oracle_is_vertex = oracle.is_dominant_vertex;
  v.oracle_agrees = v.oracle_is_vertex == v.theorem_satisfied;
  return v;
}

SymmetryReport check_symmetric(const LossSpec& spec, std::size_t K, std::size_t trials, double tol,
                               std::uint64_t seed) {
  spec.validate();
  if (trials < 100) raise(ErrorKind::config, "check_symmetric needs at least 100 trials");
  if (K < 2) raise(ErrorKind::config, "check_symmetric needs K >= 2");
  Rng rng(seed);
  std::vector<double> sums;
  sums.reserve(trials);
  std::vector<double> p(K);
  for (std::size_t i = 0; i < trials; ++i) {
    double total = 0.0;
    for (double& v : p) {
      v = -std::log(1.0 - rng.uniform());
      total += v;
    }
    for (double& v : p) v /= total;
    const auto row = loss_row(spec, ProbVector::trusted(p));
    sums.push_back(std::accumulate(row.begin(), row.end(), 0.0));
  }
  SymmetryReport report;
  report.constant_C = std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(trials);
  for (double s : sums) report.max_deviation = std::max(report.max_deviation, std::abs(s - report.constant_C));
  report.is_symmetric = report.max_deviation < tol;
  return report;
}

AsymmetryWeights weights_from_noise(const NoiseSpec& noise, ClassLabel y, std::size_t K) {
  if (y.index >= K) raise(ErrorKind::invalid_input, "class out of range");
  const TransitionReport tr = transition_matrix(noise, K);
  return AsymmetryWeights::make(tr.matrix[y.index], y);
}

std::vector<ProbeVerdict> noise_tolerance_probe(const LossSpec& spec, const NoiseSpec& noise,
                                                std::size_t K, std::size_t resolution) {
  std::vector<ProbeVerdict> out;
  out.reserve(K);
  for (std::size_t y = 0; y < K; ++y) {
    const AsymmetryWeights w = weights_from_noise(noise, ClassLabel{y}, K);
    OracleResult r = oracle_minimize(spec, w, resolution);
    out.push_back({ClassLabel{y}, std::move(r.argmin), r.is_dominant_vertex});
  }
  return out;
}

nlohmann::json to_json(const AsymmetryVerdict& v) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return {{"theorem_satisfied", v.theorem_satisfied},
          {"required_ratio", num(v.required_ratio)},
          {"actual_ratio", num(v.actual_ratio)},
          {"sup_h", num(v.sup_h)},
          {"oracle_argmin", v.oracle_argmin.vec()},
          {"oracle_is_vertex", v.oracle_is_vertex},
          {"oracle_agrees", v.oracle_agrees}};
}

nlohmann::json to_json(const SymmetryReport& r) {
  return {{"constant_C", r.constant_C}, {"max_deviation", r.max_deviation}, {"is_symmetric", r.is_symmetric}};
}

}  // namespace asymloss
