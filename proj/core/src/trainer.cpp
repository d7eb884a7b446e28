#include "asymloss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "asymloss/error.hpp"
#include "asymloss/rng.hpp"

namespace asymloss {

namespace {

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

std::size_t argmax_row(const std::vector<double>& logits, std::size_t row, std::size_t K) {
  const auto begin = logits.begin() + static_cast<std::ptrdiff_t>(row * K);
  return static_cast<std::size_t>(std::max_element(begin, begin + static_cast<std::ptrdiff_t>(K)) - begin);
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
  return diff / std::max(inf_norm(numeric), 1e-8);
}

// Within `margin` of a point where some component loss is not differentiable.
bool near_kink(const LossSpec& spec, std::span<const double> p, std::size_t y, double margin) {
  switch (spec.kind) {
    case LossKind::mae:
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (std::abs(p[k] - (k == y ? 1.0 : 0.0)) < margin) return true;
      }
      return false;
    case LossKind::amse:
      if (spec.q > 1.0) return false;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (std::abs(p[k] - (k == y ? spec.a : 0.0)) < margin) return true;
      }
      return false;
    case LossKind::normalized:
      // The denominator involves every class's row.
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (near_kink(spec.base(), p, k, margin)) return true;
      }
      return false;
    case LossKind::apl:
      return near_kink(spec.active(), p, y, margin) || near_kink(spec.passive(), p, y, margin);
    default:
      return false;
  }
}

}  // namespace

void OptConfig::validate() const {
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) raise(ErrorKind::config, "learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) raise(ErrorKind::config, "momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) raise(ErrorKind::config, "weight decay must be non-negative");
  if (epochs < 1) raise(ErrorKind::config, "epochs must be >= 1");
  if (batch_size < 1) raise(ErrorKind::config, "batch size must be >= 1");
}

void sgd_step(MlpParams& params, const MlpGrads& grads, OptState& state, const OptConfig& opt, double lr) {
  if (grads.layers.size() != params.layers.size()) raise(ErrorKind::invalid_input, "gradient shape mismatch");
  if (state.velocity.empty()) {
    state.velocity = params.layers;
    for (auto& v : state.velocity) {
      std::fill(v.weight.begin(), v.weight.end(), 0.0);
      std::fill(v.bias.begin(), v.bias.end(), 0.0);
    }
  }
  auto update = [&](std::vector<double>& theta, const std::vector<double>& g, std::vector<double>& v) {
    if (theta.size() != g.size() || theta.size() != v.size()) {
      raise(ErrorKind::invalid_input, "gradient shape mismatch");
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double decay = opt.decay == DecayKind::l1 ? opt.weight_decay * sign(theta[i])
                                                      : opt.weight_decay * theta[i];
      v[i] = opt.momentum * v[i] + g[i] + decay;
      theta[i] -= lr * v[i];
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, grads.layers[l].weight, state.velocity[l].weight);
    update(params.layers[l].bias, grads.layers[l].bias, state.velocity[l].bias);
  }
}

double cosine_lr(std::size_t epoch, std::size_t total_epochs, double lr0) {
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

double PredictionHistogram::flipped_fraction_above(double threshold) const {
  const std::size_t total = std::accumulate(counts_flipped.begin(), counts_flipped.end(), std::size_t{0});
  if (total == 0) return 0.0;
  std::size_t above = 0;
  for (std::size_t b = 0; b < bins(); ++b) {
    if (static_cast<double>(b) / static_cast<double>(bins()) >= threshold) above += counts_flipped[b];
  }
  return static_cast<double>(above) / static_cast<double>(total);
}

double PredictionHistogram::clean_fraction_above(double threshold) const {
  const std::size_t total = std::accumulate(counts_clean.begin(), counts_clean.end(), std::size_t{0});
  if (total == 0) return 0.0;
  std::size_t above = 0;
  for (std::size_t b = 0; b < bins(); ++b) {
    if (static_cast<double>(b) / static_cast<double>(bins()) >= threshold) above += counts_clean[b];
  }
  return static_cast<double>(above) / static_cast<double>(total);
}

PredictionHistogram probability_histogram(const MlpParams& params, const Dataset& train_set,
                                          std::size_t bins, std::size_t epoch) {
  if (bins == 0) raise(ErrorKind::config, "histogram needs at least one bin");
  PredictionHistogram h;
  h.epoch = epoch;
  h.counts_clean.assign(bins, 0);
  h.counts_flipped.assign(bins, 0);
  if (train_set.size() == 0) return h;
  const std::size_t K = params.num_classes();
  const std::vector<double> logits = forward_batch(params, train_set);
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    const ProbVector p = softmax(std::span<const double>(logits).subspan(i * K, K));
    const Sample& s = train_set.samples[i];
    const double prob = p[s.observed_label.index];
    const auto b = std::min(bins - 1, static_cast<std::size_t>(prob * static_cast<double>(bins)));
    (s.flipped ? h.counts_flipped : h.counts_clean)[b]++;
  }
  return h;
}

double accuracy(const MlpParams& params, const Dataset& data, bool against_clean) {
  if (data.size() == 0) return 0.0;
  const std::size_t K = params.num_classes();
  const std::vector<double> logits = forward_batch(params, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample& s = data.samples[i];
    const ClassLabel target = against_clean ? s.clean_label : s.observed_label;
    if (argmax_row(logits, i, K) == target.index) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainReport train(const Dataset& train_set, const Dataset& test_set, const MlpConfig& mlp,
                  const OptConfig& opt, const LossSpec& spec,
                  const std::vector<std::size_t>& histogram_epochs, MlpParams* final_params) {
  opt.validate();
  spec.validate();
  train_set.validate();
  test_set.validate();
  if (train_set.size() == 0) raise(ErrorKind::invalid_input, "training set is empty");
  if (train_set.num_classes != test_set.num_classes || train_set.feature_dim != test_set.feature_dim) {
    raise(ErrorKind::invalid_input, "train and test sets disagree on K or feature dimension");
  }

  std::vector<std::size_t> dims{train_set.feature_dim};
  dims.insert(dims.end(), mlp.hidden.begin(), mlp.hidden.end());
  dims.push_back(train_set.num_classes);
  MlpParams params = init_mlp(dims, opt.seed);
  OptState state;
  Rng shuffle_rng = Rng::substream(opt.seed, 1);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, opt.epochs, opt.lr0);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const MlpGrads grads = backward(params, train_set, batch, spec);
      loss_sum += grads.mean_loss * static_cast<double>(batch.size());
      sgd_step(params, grads, state, opt, lr);
    }

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.lr = lr;
    m.train_loss = loss_sum / static_cast<double>(train_set.size());
    m.train_acc_noisy = accuracy(params, train_set, false);
    m.train_acc_clean = accuracy(params, train_set, true);
    m.test_acc = accuracy(params, test_set, true);
    report.per_epoch.push_back(m);

    const bool last = epoch + 1 == opt.epochs;
    const bool wanted = std::find(histogram_epochs.begin(), histogram_epochs.end(), epoch + 1) !=
                        histogram_epochs.end();
    if (wanted || last) {
      report.histograms.push_back(probability_histogram(params, train_set, kHistogramBins, epoch + 1));
    }
  }
  report.final_test_acc = report.per_epoch.back().test_acc;
  if (final_params != nullptr) *final_params = std::move(params);
  return report;
}

std::optional<PointCheck> gradient_check_at(const LossSpec& spec, std::span<const double> p,
                                            std::size_t y, double h) {
  const std::size_t K = p.size();
  if (near_kink(spec, p, y, 2.0 * h)) return std::nullopt;
  for (double v : p) {
    if (v <= 2.0 * h) return std::nullopt;
  }

  PointCheck out;
  std::vector<double> analytic(K);
  loss_grad_unclamped(spec, p, y, analytic);
  std::vector<double> numeric(K);
  std::vector<double> work(p.begin(), p.end());
  for (std::size_t k = 0; k < K; ++k) {
    work[k] = p[k] + h;
    const double up = loss_value_unclamped(spec, work, y);
    work[k] = p[k] - h;
    const double down = loss_value_unclamped(spec, work, y);
    work[k] = p[k];
    numeric[k] = (up - down) / (2.0 * h);
  }
  out.rel_err_p = relative_error(analytic, numeric);

  std::vector<double> logits(K);
  for (std::size_t k = 0; k < K; ++k) logits[k] = std::log(p[k]);
  const auto g_logits = loss_grad_logits(spec, logits, ClassLabel{y});
  std::vector<double> fd_logits(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double saved = logits[k];
    logits[k] = saved + h;
    const double up = loss_value(spec, softmax(logits), ClassLabel{y});
    logits[k] = saved - h;
    const double down = loss_value(spec, softmax(logits), ClassLabel{y});
    logits[k] = saved;
    fd_logits[k] = (up - down) / (2.0 * h);
  }
  out.rel_err_logits = relative_error(g_logits, fd_logits);
  return out;
}

GradCheckResult gradient_check(const LossSpec& spec, std::size_t trials,
                               const std::vector<std::size_t>& class_counts, std::uint64_t seed, double h) {
  spec.validate();
  if (trials < 10) raise(ErrorKind::config, "gradient_check needs at least 10 trials");
  GradCheckResult result;
  Rng rng(seed);
  for (std::size_t K : class_counts) {
    if (K < 2) raise(ErrorKind::config, "gradient_check needs K >= 2");
    std::vector<double> p(K);
    for (std::size_t t = 0; t < trials; ++t) {
      double total = 0.0;
      for (double& v : p) {
        v = -std::log(1.0 - rng.uniform());
        total += v;
      }
      for (double& v : p) v = 0.5 * v / total + 0.5 / static_cast<double>(K);
      const std::size_t y = rng.uniform_index(K);
      const auto check = gradient_check_at(spec, p, y, h);
      if (!check) {
        ++result.excluded;
        continue;
      }
      ++result.evaluated;
      result.max_rel_err_p = std::max(result.max_rel_err_p, check->rel_err_p);
      result.max_rel_err_logits = std::max(result.max_rel_err_logits, check->rel_err_logits);
    }
  }
  return result;
}

nlohmann::json to_json(const OptConfig& opt) {
  return {{"lr", opt.lr0},
          {"momentum", opt.momentum},
          {"weight_decay", opt.weight_decay},
          {"decay", opt.decay == DecayKind::l1 ? "l1" : "l2"},
          {"epochs", opt.epochs},
          {"batch_size", opt.batch_size},
          {"seed", opt.seed}};
}

OptConfig opt_from_json(const nlohmann::json& j, const OptConfig& d) {
  OptConfig opt = d;
  try {
    opt.lr0 = j.value("lr", d.lr0);
    opt.momentum = j.value("momentum", d.momentum);
    opt.weight_decay = j.value("weight_decay", d.weight_decay);
    const std::string decay = j.value("decay", std::string(d.decay == DecayKind::l1 ? "l1" : "l2"));
    if (decay == "l1") {
      opt.decay = DecayKind::l1;
    } else if (decay == "l2") {
      opt.decay = DecayKind::l2;
    } else {
      raise(ErrorKind::config, "decay must be 'l1' or 'l2'");
    }
    opt.epochs = j.value("epochs", d.epochs);
    opt.batch_size = j.value("batch_size", d.batch_size);
    opt.seed = j.value("seed", d.seed);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::config, std::string("malformed optimizer config: ") + e.what());
  }
  opt.validate();
  return opt;
}

nlohmann::json to_json(const PredictionHistogram& h) {
  return {{"epoch", h.epoch}, {"bins", h.bins()}, {"counts_clean", h.counts_clean},
          {"counts_flipped", h.counts_flipped}};
}

nlohmann::json to_json(const TrainReport& report) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& m : report.per_epoch) {
    epochs.push_back({{"epoch", m.epoch},
                      {"lr", m.lr},
                      {"train_loss", m.train_loss},
                      {"train_acc_noisy", m.train_acc_noisy},
                      {"train_acc_clean", m.train_acc_clean},
                      {"test_acc", m.test_acc}});
  }
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : report.histograms) hist.push_back(to_json(h));
  return {{"per_epoch", epochs}, {"final_test_acc", report.final_test_acc}, {"histograms", hist}};
}

nlohmann::json to_json(const GradCheckResult& r) {
  return {{"max_rel_err_p", r.max_rel_err_p},
          {"max_rel_err_logits", r.max_rel_err_logits},
          {"evaluated", r.evaluated},
          {"excluded", r.excluded}};
}

}  // namespace asymloss
