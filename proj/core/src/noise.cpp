#include "asymloss/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asymloss/error.hpp"
#include "asymloss/rng.hpp"

namespace asymloss {

namespace {

using nlohmann::json;

constexpr int kMaxRateRejections = 64;

std::string kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::symmetric: return "symmetric";
    case NoiseKind::pairflip: return "pairflip";
    case NoiseKind::groupshift: return "groupshift";
    case NoiseKind::instance: return "instance";
  }
  return "?";
}

// Cyclic successor of each class inside its group; classes map to themselves
// when their group is a singleton.
std::vector<std::size_t> group_successors(const NoiseSpec& spec, std::size_t K) {
  std::vector<std::size_t> succ(K);
  for (std::size_t k = 0; k < K; ++k) succ[k] = k;
  for (const auto& g : spec.groups) {
    for (std::size_t i = 0; i < g.size(); ++i) succ[g[i]] = g[(i + 1) % g.size()];
  }
  return succ;
}

void require_clean(const Dataset& d) {
  d.validate();
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    if (d.samples[i].observed_label != d.samples[i].clean_label) {
      raise(ErrorKind::invalid_input,
            "noise injection expects clean labels; sample " + std::to_string(i) + " is already corrupted");
    }
  }
}

}  // namespace

NoiseSpec NoiseSpec::symmetric(double eta) { return NoiseSpec{.kind = NoiseKind::symmetric, .eta = eta}; }

NoiseSpec NoiseSpec::pairflip(double eta, std::map<std::size_t, std::size_t> flip_map) {
  return NoiseSpec{.kind = NoiseKind::pairflip, .eta = eta, .flip_map = std::move(flip_map)};
}

NoiseSpec NoiseSpec::groupshift(double eta, std::vector<std::vector<std::size_t>> groups) {
  return NoiseSpec{.kind = NoiseKind::groupshift, .eta = eta, .groups = std::move(groups)};
}

NoiseSpec NoiseSpec::instance(InstanceNoiseParams params) {
  return NoiseSpec{.kind = NoiseKind::instance, .idn = params};
}

void NoiseSpec::validate(std::size_t K) const {
  if (K < 2) raise(ErrorKind::config, "noise needs at least 2 classes");
  if (kind != NoiseKind::instance && (!std::isfinite(eta) || eta < 0.0 || eta >= 1.0)) {
    raise(ErrorKind::config, "noise rate must lie in [0, 1)");
  }
  switch (kind) {
    case NoiseKind::symmetric: {
      const double bound = static_cast<double>(K - 1) / static_cast<double>(K);
      if (eta >= bound) {
        raise(ErrorKind::dominance, "symmetric noise needs eta < (K-1)/K = " + std::to_string(bound));
      }
      break;
    }
    case NoiseKind::pairflip:
      if (eta >= 0.5) raise(ErrorKind::dominance, "pair-flip noise needs eta < 0.5");
      for (const auto& [from, to] : flip_map) {
        if (from >= K || to >= K) raise(ErrorKind::config, "flip map references a class >= K");
        if (from == to) raise(ErrorKind::config, "flip map has a fixed point at class " + std::to_string(from));
      }
      break;
    case NoiseKind::groupshift: {
      if (eta >= 0.5) raise(ErrorKind::dominance, "group-shift noise needs eta < 0.5");
      std::vector<int> seen(K, 0);
      for (const auto& g : groups) {
        for (std::size_t c : g) {
          if (c >= K) raise(ErrorKind::config, "group references a class >= K");
          ++seen[c];
        }
      }
      if (std::any_of(seen.begin(), seen.end(), [](int n) { return n != 1; })) {
        raise(ErrorKind::config, "groups must partition the K classes");
      }
      break;
    }
    case NoiseKind::instance:
      if (!std::isfinite(idn.eta_mean) || idn.eta_mean < 0.0 || idn.eta_mean >= 1.0) {
        raise(ErrorKind::config, "instance noise needs 0 <= eta_mean < 1");
      }
      if (!std::isfinite(idn.eta_std) || idn.eta_std < 0.0) {
        raise(ErrorKind::config, "instance noise needs eta_std >= 0");
      }
      break;
  }
}

std::map<std::size_t, std::size_t> cifar10_flip_map() {
  return {{9, 1}, {2, 0}, {4, 7}, {3, 5}, {5, 3}};
}

std::vector<std::vector<std::size_t>> consecutive_groups(std::size_t K, std::size_t group_size) {
  if (group_size == 0) raise(ErrorKind::config, "group size must be positive");
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t start = 0; start < K; start += group_size) {
    std::vector<std::size_t> g;
    for (std::size_t c = start; c < std::min(K, start + group_size); ++c) g.push_back(c);
    groups.push_back(std::move(g));
  }
  return groups;
}

TransitionReport transition_matrix(const NoiseSpec& spec, std::size_t K) {
  spec.validate(K);
  if (spec.kind == NoiseKind::instance) {
    raise(ErrorKind::unsupported, "instance-dependent noise has no fixed transition matrix");
  }
  TransitionReport report;
  auto& M = report.matrix;
  M.assign(K, std::vector<double>(K, 0.0));
  const double eta = spec.eta;
  switch (spec.kind) {
    case NoiseKind::symmetric:
      for (std::size_t y = 0; y < K; ++y) {
        for (std::size_t k = 0; k < K; ++k) M[y][k] = y == k ? 1.0 - eta : eta / static_cast<double>(K - 1);
      }
      break;
    case NoiseKind::pairflip:
      for (std::size_t y = 0; y < K; ++y) M[y][y] = 1.0;
      for (const auto& [from, to] : spec.flip_map) {
        M[from][from] = 1.0 - eta;
        M[from][to] = eta;
      }
      break;
    case NoiseKind::groupshift: {
      const auto succ = group_successors(spec, K);
      for (std::size_t y = 0; y < K; ++y) {
        M[y][y] = 1.0;
        if (succ[y] != y) {
          M[y][y] = 1.0 - eta;
          M[y][succ[y]] = eta;
        }
      }
      break;
    }
    case NoiseKind::instance:
      break;
  }
  return report;
}

Dataset inject(const Dataset& dataset, const NoiseSpec& spec, std::uint64_t seed) {
  if (spec.kind == NoiseKind::instance) return inject_instance(dataset, spec, seed);
  const std::size_t K = dataset.num_classes;
  spec.validate(K);
  require_clean(dataset);
  const auto succ = group_successors(spec, K);

  Dataset out = dataset;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    Sample& s = out.samples[i];
    // Two draws per sample: the flip decision, then the target choice.
    Rng rng = Rng::substream(seed, i);
    const double u = rng.uniform();
    const std::size_t pick = rng.uniform_index(K - 1);
    const std::size_t y = s.clean_label.index;
    std::size_t observed = y;
    if (u < spec.eta) {
      switch (spec.kind) {
        case NoiseKind::symmetric:
          observed = pick < y ? pick : pick + 1;
          break;
        case NoiseKind::pairflip:
          if (auto it = spec.flip_map.find(y); it != spec.flip_map.end()) observed = it->second;
          break;
        case NoiseKind::groupshift:
          observed = succ[y];
          break;
        case NoiseKind::instance:
          break;
      }
    }
    s.observed_label = ClassLabel{observed};
    s.flipped = observed != y;
  }
  return out;
}

Dataset inject_instance(const Dataset& dataset, const NoiseSpec& spec, std::uint64_t seed) {
  if (spec.kind != NoiseKind::instance) {
    raise(ErrorKind::config, "inject_instance needs an instance-kind noise spec");
  }
  const std::size_t K = dataset.num_classes;
  const std::size_t D = dataset.feature_dim;
  spec.validate(K);
  require_clean(dataset);

  // projection[d * K + k]: weight of feature d toward class k.
  std::vector<double> projection(D * K);
  Rng proj_rng(spec.idn.projection_seed);
  for (double& w : projection) w = proj_rng.normal();

  Dataset out = dataset;
  std::vector<double> scores(K);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    Sample& s = out.samples[i];
    Rng rng = Rng::substream(seed, i);
    double rate = spec.idn.eta_mean;
    if (spec.idn.eta_std > 0.0) {
      int tries = 0;
      do {
        rate = rng.normal(spec.idn.eta_mean, spec.idn.eta_std);
      } while ((rate < 0.0 || rate >= 1.0) && ++tries < kMaxRateRejections);
      rate = std::clamp(rate, 0.0, std::nextafter(1.0, 0.0));
    }
    const double u = rng.uniform();
    const double v = rng.uniform();
    const std::size_t y = s.clean_label.index;
    std::size_t observed = y;
    if (u < rate) {
      double best = -INFINITY;
      for (std::size_t k = 0; k < K; ++k) {
        double z = 0.0;
        for (std::size_t d = 0; d < D; ++d) z += s.features[d] * projection[d * K + k];
        scores[k] = z;
        if (k != y) best = std::max(best, z);
      }
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        scores[k] = k == y ? 0.0 : std::exp(scores[k] - best);
        total += scores[k];
      }
      double acc = 0.0;
      const double target = v * total;
      observed = y == 0 ? 1 : 0;
      for (std::size_t k = 0; k < K; ++k) {
        if (k == y) continue;
        acc += scores[k];
        observed = k;
        if (target < acc) break;
      }
    }
    s.observed_label = ClassLabel{observed};
    s.flipped = observed != y;
  }
  return out;
}

TransitionReport empirical_rates(const Dataset& clean, const Dataset& noisy) {
  if (clean.size() != noisy.size() || clean.num_classes != noisy.num_classes) {
    raise(ErrorKind::invalid_input, "clean and noisy datasets are not aligned");
  }
  const std::size_t K = clean.num_classes;
  TransitionReport report;
  report.empirical_matrix.assign(K, std::vector<double>(K, 0.0));
  report.row_counts.assign(K, 0);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const std::size_t y = clean.samples[i].clean_label.index;
    if (noisy.samples[i].clean_label.index != y) {
      raise(ErrorKind::invalid_input, "datasets disagree on the clean label of sample " + std::to_string(i));
    }
    const std::size_t k = noisy.samples[i].observed_label.index;
    if (y >= K || k >= K) raise(ErrorKind::invalid_input, "label out of range in sample " + std::to_string(i));
    report.empirical_matrix[y][k] += 1.0;
    ++report.row_counts[y];
  }
  for (std::size_t y = 0; y < K; ++y) {
    if (report.row_counts[y] == 0) continue;
    for (double& v : report.empirical_matrix[y]) v /= static_cast<double>(report.row_counts[y]);
  }
  return report;
}

TransitionReport empirical_rates(const Dataset& clean, const Dataset& noisy, const NoiseSpec& spec) {
  TransitionReport report = empirical_rates(clean, noisy);
  if (spec.kind == NoiseKind::instance) return report;
  report.matrix = transition_matrix(spec, clean.num_classes).matrix;
  double worst = 0.0;
  for (std::size_t y = 0; y < report.matrix.size(); ++y) {
    if (report.row_counts[y] == 0) continue;
    for (std::size_t k = 0; k < report.matrix.size(); ++k) {
      worst = std::max(worst, std::abs(report.matrix[y][k] - report.empirical_matrix[y][k]));
    }
  }
  report.max_abs_diff = worst;
  return report;
}

nlohmann::json to_json(const NoiseSpec& spec) {
  json j{{"kind", kind_name(spec.kind)}};
  switch (spec.kind) {
    case NoiseKind::symmetric:
      j["eta"] = spec.eta;
      break;
    case NoiseKind::pairflip: {
      j["eta"] = spec.eta;
      json m = json::object();
      for (const auto& [from, to] : spec.flip_map) m[std::to_string(from)] = to;
      j["flip_map"] = m;
      break;
    }
    case NoiseKind::groupshift:
      j["eta"] = spec.eta;
      j["groups"] = spec.groups;
      break;
    case NoiseKind::instance:
      j["eta_mean"] = spec.idn.eta_mean;
      j["eta_std"] = spec.idn.eta_std;
      j["projection_seed"] = spec.idn.projection_seed;
      break;
  }
  return j;
}

NoiseSpec noise_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) raise(ErrorKind::config, "noise spec must be an object");
    const std::string kind = j.value("kind", std::string("symmetric"));
    const double eta = j.value("eta", 0.0);
    if (kind == "symmetric") return NoiseSpec::symmetric(eta);
    if (kind == "pairflip") {
      std::map<std::size_t, std::size_t> m;
      if (j.contains("flip_map")) {
        for (const auto& [from, to] : j.at("flip_map").items()) {
          m[static_cast<std::size_t>(std::stoul(from))] = to.get<std::size_t>();
        }
      } else {
        m = cifar10_flip_map();
      }
      return NoiseSpec::pairflip(eta, std::move(m));
    }
    if (kind == "groupshift") {
      if (!j.contains("groups")) raise(ErrorKind::config, "groupshift noise needs 'groups'");
      return NoiseSpec::groupshift(eta, j.at("groups").get<std::vector<std::vector<std::size_t>>>());
    }
    if (kind == "instance") {
      return NoiseSpec::instance({.eta_mean = j.value("eta_mean", 0.0),
                                  .eta_std = j.value("eta_std", 0.0),
                                  .projection_seed = j.value("projection_seed", std::uint64_t{0})});
    }
    raise(ErrorKind::config, "unknown noise kind '" + kind + "'");
  } catch (const json::exception& e) {
    raise(ErrorKind::config, std::string("malformed noise spec: ") + e.what());
  } catch (const std::invalid_argument&) {
    raise(ErrorKind::config, "flip_map keys must be class indices");
  }
}

nlohmann::json to_json(const TransitionReport& report) {
  json j;
  j["matrix"] = report.matrix.empty() ? json(nullptr) : json(report.matrix);
  j["empirical_matrix"] = report.empirical_matrix;
  j["row_counts"] = report.row_counts;
  j["max_abs_diff"] = report.max_abs_diff;
  return j;
}

}  // namespace asymloss
