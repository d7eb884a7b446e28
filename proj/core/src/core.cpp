#include "asymloss/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "asymloss/error.hpp"

namespace asymloss {

bool ProbVector::is_valid(std::span<const double> values, double tol) {
  if (values.empty()) return false;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

ProbVector ProbVector::from(std::vector<double> values) {
  if (!is_valid(values)) {
    raise(ErrorKind::invalid_input, "vector of size " + std::to_string(values.size()) +
                                        " is not on the probability simplex");
  }
  return ProbVector(std::move(values));
}

ProbVector ProbVector::trusted(std::vector<double> values) noexcept {
  return ProbVector(std::move(values));
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.features.size() != feature_dim) {
      raise(ErrorKind::invalid_input, "sample " + std::to_string(i) + " has " +
                                          std::to_string(s.features.size()) +
                                          " features, expected " + std::to_string(feature_dim));
    }
    if (s.clean_label.index >= num_classes || s.observed_label.index >= num_classes) {
      raise(ErrorKind::invalid_input, "sample " + std::to_string(i) + " has a label >= K");
    }
    if (s.flipped != (s.clean_label != s.observed_label)) {
      raise(ErrorKind::invalid_input,
            "sample " + std::to_string(i) + " flipped flag disagrees with its labels");
    }
  }
}

ProbVector softmax(std::span<const double> logits) {
  if (logits.size() < 2) raise(ErrorKind::invalid_input, "softmax needs at least 2 logits");
  for (double z : logits) {
    if (!std::isfinite(z)) raise(ErrorKind::invalid_input, "softmax input is not finite");
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - zmax);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return ProbVector::trusted(std::move(out));
}

ProbVector one_hot(ClassLabel y, std::size_t num_classes) {
  if (y.index >= num_classes) {
    raise(ErrorKind::invalid_input, "label " + std::to_string(y.index) + " out of range for K=" +
                                        std::to_string(num_classes));
  }
  std::vector<double> out(num_classes, 0.0);
  out[y.index] = 1.0;
  return ProbVector::trusted(std::move(out));
}

void clamp_simplex_in_place(std::span<double> p, double eps) {
  const double trigger = eps / (1.0 + static_cast<double>(p.size()) * eps);
  const bool needs = std::any_of(p.begin(), p.end(), [&](double v) { return v < trigger; });
  if (!needs) return;
  double sum = 0.0;
  for (double& v : p) {
    v = std::max(v, eps);
    sum += v;
  }
  for (double& v : p) v /= sum;
}

ProbVector clamp_simplex(const ProbVector& p, double eps) {
  if (!(eps > 0.0) || !(eps * static_cast<double>(p.size()) < 1.0)) {
    raise(ErrorKind::invalid_input, "clamp epsilon must lie in (0, 1/K)");
  }
  std::vector<double> out = p.vec();
  clamp_simplex_in_place(out, eps);
  return ProbVector::trusted(std::move(out));
}

}  // namespace asymloss
