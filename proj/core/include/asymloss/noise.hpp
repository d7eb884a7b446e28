#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymloss/core.hpp"

namespace asymloss {

enum class NoiseKind { symmetric, pairflip, groupshift, instance };

struct InstanceNoiseParams {
  double eta_mean = 0.0;
  double eta_std = 0.0;
  std::uint64_t projection_seed = 0;

  friend bool operator==(const InstanceNoiseParams&, const InstanceNoiseParams&) = default;
};

/// Label-corruption process.
///
///   symmetric   keep w.p. 1 - eta, else move uniformly to one of the K-1 others
///   pairflip    class c in flip_map moves to flip_map[c] w.p. eta; others kept
///   groupshift  within each ordered group, class moves to its cyclic successor w.p. eta
///   instance    per-sample rate ~ N(eta_mean, eta_std) truncated to [0, 1); the
///               target follows a softmax over a fixed random projection of the
///               features, restricted to k != y
struct NoiseSpec {
  NoiseKind kind = NoiseKind::symmetric;
  double eta = 0.0;
  std::map<std::size_t, std::size_t> flip_map{};
  std::vector<std::vector<std::size_t>> groups{};
  InstanceNoiseParams idn{};

  static NoiseSpec symmetric(double eta);
  static NoiseSpec pairflip(double eta, std::map<std::size_t, std::size_t> flip_map);
  static NoiseSpec groupshift(double eta, std::vector<std::vector<std::size_t>> groups);
  static NoiseSpec instance(InstanceNoiseParams params);

  // Throws ErrorKind::config when the spec is not usable with K classes and
  // ErrorKind::dominance when the clean label would not stay the most likely one.
  void validate(std::size_t num_classes) const;

  // Overall corruption rate: eta, or eta_mean for the instance kind.
  double rate() const noexcept { return kind == NoiseKind::instance ? idn.eta_mean : eta; }

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Pair-flip map for the 10 CIFAR-10 classes: TRUCK->AUTOMOBILE,
/// BIRD->AIRPLANE, DEER->HORSE, CAT<->DOG.
std::map<std::size_t, std::size_t> cifar10_flip_map();

/// Consecutive groups of `group_size` classes ({0..4}, {5..9}, ...), the
/// CIFAR-100 super-class layout when K = 100 and group_size = 5. The last
/// group is shorter when group_size does not divide K.
std::vector<std::vector<std::size_t>> consecutive_groups(std::size_t num_classes,
                                                         std::size_t group_size);

struct TransitionReport {
  // matrix[y][k] = P(observed = k | clean = y); empty for the instance kind.
  std::vector<std::vector<double>> matrix;
  std::vector<std::vector<double>> empirical_matrix;
  std::vector<std::size_t> row_counts;
  // Max |matrix - empirical| over rows with at least one sample; 0 if either side is missing.
  double max_abs_diff = 0.0;
};

/// Analytic transition matrix. The instance kind has no fixed matrix and
/// raises ErrorKind::unsupported.
TransitionReport transition_matrix(const NoiseSpec& spec, std::size_t num_classes);

/// Corrupts observed labels. Sample i draws from Rng::substream(seed, i), so
/// output does not depend on processing order. Dispatches to inject_instance
/// for the instance kind.
Dataset inject(const Dataset& dataset, const NoiseSpec& spec, std::uint64_t seed);

Dataset inject_instance(const Dataset& dataset, const NoiseSpec& spec, std::uint64_t seed);

/// Empirical K x K frequency matrix of (clean, observed) pairs. With a spec,
/// also fills the analytic matrix (when one exists) and max_abs_diff.
TransitionReport empirical_rates(const Dataset& clean, const Dataset& noisy);
TransitionReport empirical_rates(const Dataset& clean, const Dataset& noisy, const NoiseSpec& spec);

nlohmann::json to_json(const NoiseSpec& spec);
NoiseSpec noise_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TransitionReport& report);

}  // namespace asymloss
