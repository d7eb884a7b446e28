#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymloss/core.hpp"
#include "asymloss/losses.hpp"
#include "asymloss/noise.hpp"

namespace asymloss {

inline constexpr double kThresholdTolerance = 1e-9;

/// Weights w_1..w_K of a weighted risk sum_k w_k L(p, k) with a strictly
/// dominant index t.
struct AsymmetryWeights {
  std::vector<double> w;
  ClassLabel t;

  /// Validates: finite, non-negative, w_t > max_{i != t} w_i. Violations raise
  /// ErrorKind::dominance (ErrorKind::config for malformed input).
  static AsymmetryWeights make(std::vector<double> w, ClassLabel t);
  /// Same, with t taken as the argmax of w.
  static AsymmetryWeights dominant(std::vector<double> w);

  std::size_t size() const noexcept { return w.size(); }
  /// n = argmax over i != t of w_i (lowest index among ties).
  std::size_t runner_up() const;
  /// w_t / w_n; +inf when w_n = 0.
  double ratio() const;
};

/// Right-hand side of the AMSE asymmetry condition:
///   q <= 1:  1
///   q >  1:  (a^(q-1) + sum_{i != t} w_i / w_n) / (a - 1)^(q-1)
/// and 0 when w_n = 0 (the condition holds trivially). For q > 1 with a = 1
/// the ratio is infinite and ErrorKind::unsatisfiable is raised.
double theorem_threshold(double q, double a, const AsymmetryWeights& weights);

/// True iff AMSE(a, q) is asymmetric for these weights, i.e.
/// w_t / w_n >= theorem_threshold within kThresholdTolerance.
bool theorem_satisfied(double q, double a, const AsymmetryWeights& weights);

/// Numerical supremum over x in [0, 1) of
///
///   h(x) = [a^q + 1 - (a-1+x)^q - x^q + S (1 - x^q - (1-x)^q)]
///          / [(a-x)^q + (1-x)^q - (a-1)^q],     S = sum_{i != t, n} w_i / w_n,
///
/// the two-coordinate reduction of the weighted risk onto f = x e_t + (1-x) e_n.
/// Evaluated in d = 1 - x with expm1/log1p differences so the removable point
/// x = 1 does not cancel catastrophically. Dense grid of `grid` points, then
/// golden-section refinement around the best cell, or a geometric approach
/// toward x -> 1 when the best cell touches it. Requires grid >= 1000.
/// Returns 0 when w_n = 0.
double sup_h(double q, double a, const AsymmetryWeights& weights, std::size_t grid = 20000);

struct OracleResult {
  ProbVector argmin;
  double objective = 0.0;         // sum_k w_k L(argmin, k)
  double vertex_objective = 0.0;  // same at e_t
  double cell = 0.0;              // finest grid spacing searched
  std::size_t points = 0;         // grid points evaluated
  bool is_dominant_vertex = false;
};

/// Brute-force minimizer of sum_k w_k loss_value(spec, p, k) over a grid on the
/// simplex. K <= 4: every point with coordinates in {0, 1/r, ..., 1},
/// r = resolution. K > 4: the segment x e_t + (1-x) e_n at resolution r, plus
/// a coarser (<= 200) grid over (p_t, p_n) with the remaining mass spread
/// uniformly across the other classes. e_t is evaluated first and only a
/// strictly smaller objective replaces the incumbent (relative 1e-12), so ties
/// resolve to e_t, then to the lexicographically first point.
/// is_dominant_vertex: argmin within one cell of e_t (max-norm).
OracleResult oracle_minimize(const LossSpec& spec, const AsymmetryWeights& weights,
                             std::size_t resolution);

struct AsymmetryVerdict {
  bool theorem_satisfied = false;
  double required_ratio = 0.0;  // +inf when unsatisfiable
  double actual_ratio = 0.0;
  ProbVector oracle_argmin;
  bool oracle_is_vertex = false;
  bool oracle_agrees = false;  // oracle_is_vertex == theorem_satisfied
  double sup_h = 0.0;
};

/// Closed-form threshold, sup h(x), and brute-force oracle for AMSE(a, q).
AsymmetryVerdict verify_amse(double q, double a, const AsymmetryWeights& weights,
                             std::size_t resolution, std::size_t sup_grid = 20000);

struct SymmetryReport {
  double constant_C = 0.0;     // mean row sum over the sampled points
  double max_deviation = 0.0;  // max |row sum - C|
  bool is_symmetric = false;   // max_deviation < tol
};

/// Samples `trials` uniform (flat Dirichlet) points on the K-simplex and
/// measures how far sum_k L(p, k) strays from a constant. trials >= 100.
SymmetryReport check_symmetric(const LossSpec& spec, std::size_t num_classes, std::size_t trials,
                               double tol = 1e-9, std::uint64_t seed = 0);

/// Row y of the noise transition matrix as weights: w_y = 1 - eta and
/// w_k = eta_{y,k}. Raises ErrorKind::dominance unless the row is
/// clean-label-dominant.
AsymmetryWeights weights_from_noise(const NoiseSpec& noise, ClassLabel y, std::size_t num_classes);

struct ProbeVerdict {
  ClassLabel y;
  ProbVector argmin;
  bool passed = false;
};

/// For every class y: does the oracle minimizer of the noisy per-sample risk
/// land on e_y?
std::vector<ProbeVerdict> noise_tolerance_probe(const LossSpec& spec, const NoiseSpec& noise,
                                                std::size_t num_classes, std::size_t resolution);

nlohmann::json to_json(const AsymmetryVerdict& verdict);
nlohmann::json to_json(const SymmetryReport& report);

}  // namespace asymloss
