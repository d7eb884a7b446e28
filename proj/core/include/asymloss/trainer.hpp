#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymloss/core.hpp"
#include "asymloss/losses.hpp"
#include "asymloss/mlp.hpp"

namespace asymloss {

enum class DecayKind { l1, l2 };

struct OptConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-5;
  DecayKind decay = DecayKind::l1;
  std::size_t epochs = 120;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MlpConfig {
  std::vector<std::size_t> hidden{32, 32};
};

struct OptState {
  std::vector<DenseLayer> velocity;
};

/// v <- momentum * v + g + decay;  param <- param - lr * v
/// decay = wd * sign(param) for L1 (sign(0) = 0), wd * param for L2.
/// Applied to weights and biases alike.
void sgd_step(MlpParams& params, const MlpGrads& grads, OptState& state, const OptConfig& opt,
              double lr);

/// lr0 * (1 + cos(pi * epoch / total_epochs)) / 2, stepped once per epoch.
double cosine_lr(std::size_t epoch, std::size_t total_epochs, double lr0);

inline constexpr std::size_t kHistogramBins = 20;

/// Predicted probability at the observed label, binned on [0, 1] and split by
/// whether the observed label is the clean one.
struct PredictionHistogram {
  std::size_t epoch = 0;
  std::vector<std::size_t> counts_clean;
  std::vector<std::size_t> counts_flipped;

  std::size_t bins() const noexcept { return counts_clean.size(); }
  // Fraction of flipped samples whose bin lies wholly above `threshold`.
  double flipped_fraction_above(double threshold) const;
  double clean_fraction_above(double threshold) const;
};

PredictionHistogram probability_histogram(const MlpParams& params, const Dataset& train_set,
                                          std::size_t bins = kHistogramBins, std::size_t epoch = 0);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc_noisy = 0.0;
  double train_acc_clean = 0.0;
  double test_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> per_epoch;
  double final_test_acc = 0.0;  // last epoch, not best
  std::vector<PredictionHistogram> histograms;
};

/// Full training loop: Fisher-Yates reshuffle each epoch, mini-batch SGD with
/// momentum and per-epoch cosine annealing, metrics after every epoch.
/// Histograms are taken after each 1-based epoch in `histogram_epochs` and
/// always after the last one. Deterministic given opt.seed.
TrainReport train(const Dataset& train_set, const Dataset& test_set, const MlpConfig& mlp,
                  const OptConfig& opt, const LossSpec& spec,
                  const std::vector<std::size_t>& histogram_epochs = {},
                  MlpParams* final_params = nullptr);

double accuracy(const MlpParams& params, const Dataset& data, bool against_clean);

struct GradCheckResult {
  double max_rel_err_p = 0.0;       // probability-level gradient
  double max_rel_err_logits = 0.0;  // through softmax
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // points within a finite-difference step of a kink
};

/// Relative error ||analytic - fd||_inf / max(||fd||_inf, 1e-8) of one point,
/// central differences with step h. nullopt if p sits within 2h of a
/// non-differentiable point of the loss.
struct PointCheck {
  double rel_err_p = 0.0;
  double rel_err_logits = 0.0;
};
std::optional<PointCheck> gradient_check_at(const LossSpec& spec, std::span<const double> p,
                                            std::size_t y, double h = 1e-6);

/// Random interior points p = (Dirichlet(1) + uniform) / 2, `trials` per K.
GradCheckResult gradient_check(const LossSpec& spec, std::size_t trials,
                               const std::vector<std::size_t>& class_counts, std::uint64_t seed = 0,
                               double h = 1e-6);

nlohmann::json to_json(const OptConfig& opt);
OptConfig opt_from_json(const nlohmann::json& j, const OptConfig& defaults = {});
nlohmann::json to_json(const PredictionHistogram& h);
nlohmann::json to_json(const TrainReport& report);
nlohmann::json to_json(const GradCheckResult& r);

}  // namespace asymloss
