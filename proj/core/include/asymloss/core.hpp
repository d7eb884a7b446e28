#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace asymloss {

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kLossClampEpsilon = 1e-7;

/// Class index in [0, K).
///
/// Labels are 0-based throughout the library. Class "1" in 1-based notation
/// is ClassLabel{0} here.
struct ClassLabel {
  std::size_t index = 0;

  friend bool operator==(ClassLabel, ClassLabel) = default;
  friend auto operator<=>(ClassLabel, ClassLabel) = default;
};

/// A point on the probability simplex: entries in [0, 1] summing to 1 (within
/// kSimplexTolerance). Construction through `from` validates; `trusted` skips
/// the check for values produced by code that already guarantees it.
class ProbVector {
 public:
  ProbVector() = default;

  static ProbVector from(std::vector<double> values);
  static ProbVector trusted(std::vector<double> values) noexcept;

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }

  // True if the entries satisfy the simplex invariants.
  static bool is_valid(std::span<const double> values, double tol = kSimplexTolerance);

 private:
  explicit ProbVector(std::vector<double> values) noexcept : values_(std::move(values)) {}

  std::vector<double> values_;
};

struct Sample {
  std::vector<double> features;
  ClassLabel clean_label;
  ClassLabel observed_label;
  bool flipped = false;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;

  std::size_t size() const noexcept { return samples.size(); }

  // Throws invalid_input if features have mixed widths, labels are out of
  // range, or a flipped flag disagrees with the labels.
  void validate() const;
};

/// Numerically stable softmax. Requires K >= 2 finite logits.
ProbVector softmax(std::span<const double> logits);

ProbVector one_hot(ClassLabel y, std::size_t num_classes);

/// Lifts entries away from zero so log-based losses stay finite.
///
/// If any entry is below eps / (1 + K*eps), every entry is raised to at least
/// eps and the vector renormalized. Outputs never trigger a second pass, which
/// makes the map idempotent; the smallest output entry is eps / sum, i.e. just
/// under eps. Requires 0 < eps < 1/K.
ProbVector clamp_simplex(const ProbVector& p, double eps = kLossClampEpsilon);

// Raw-vector form used on hot paths; same rule as clamp_simplex.
void clamp_simplex_in_place(std::span<double> p, double eps = kLossClampEpsilon);

}  // namespace asymloss
