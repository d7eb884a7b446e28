#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "asymloss/dataset_io.hpp"
#include "asymloss/error.hpp"
#include "asymloss/noise.hpp"

using namespace asymloss;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an asymloss::Error";
  return ErrorKind::numeric;
}

Dataset balanced(std::size_t n, std::size_t K, std::size_t D = 1) {
  return synth_dataset(SynthKind::gaussians, n, K, D, 4.0, 3);
}

std::vector<std::size_t> observed(const Dataset& d) {
  std::vector<std::size_t> out;
  for (const auto& s : d.samples) out.push_back(s.observed_label.index);
  return out;
}

}  // namespace

TEST(Transition, Symmetric) {
  const auto tr = transition_matrix(NoiseSpec::symmetric(0.3), 3);
  EXPECT_NEAR(tr.matrix[0][0], 0.7, 1e-15);
  EXPECT_NEAR(tr.matrix[0][1], 0.15, 1e-15);
  EXPECT_NEAR(tr.matrix[2][1], 0.15, 1e-15);
  for (const auto& row : tr.matrix) {
    double s = 0.0;
    for (double v : row) s += v;
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
}

TEST(Transition, PairFlip) {
  const auto tr = transition_matrix(NoiseSpec::pairflip(0.2, {{0, 1}}), 4);
  EXPECT_EQ(tr.matrix[0], (std::vector<double>{0.8, 0.2, 0, 0}));
  EXPECT_EQ(tr.matrix[1], (std::vector<double>{0, 1, 0, 0}));
  EXPECT_EQ(tr.matrix[3], (std::vector<double>{0, 0, 0, 1}));
}

TEST(Transition, GroupShiftIsCyclicWithinGroups) {
  const auto tr = transition_matrix(NoiseSpec::groupshift(0.3, {{0, 1, 2}, {3, 4}}), 5);
  EXPECT_NEAR(tr.matrix[0][1], 0.3, 1e-15);
  EXPECT_NEAR(tr.matrix[2][0], 0.3, 1e-15);
  EXPECT_NEAR(tr.matrix[3][4], 0.3, 1e-15);
  EXPECT_NEAR(tr.matrix[4][3], 0.3, 1e-15);
  EXPECT_NEAR(tr.matrix[4][4], 0.7, 1e-15);
  EXPECT_EQ(tr.matrix[0][3], 0.0);
}

TEST(Transition, InstanceHasNoMatrix) {
  EXPECT_EQ(kind_of([] { transition_matrix(NoiseSpec::instance({0.3, 0.1, 0}), 4); }), ErrorKind::unsupported);
}

TEST(Transition, CifarMap) {
  const auto m = cifar10_flip_map();
  EXPECT_EQ(m.at(9), 1u);
  EXPECT_EQ(m.at(2), 0u);
  EXPECT_EQ(m.at(4), 7u);
  EXPECT_EQ(m.at(3), 5u);
  EXPECT_EQ(m.at(5), 3u);
  EXPECT_EQ(m.size(), 5u);
}

TEST(NoiseSpecValidate, Errors) {
  EXPECT_EQ(kind_of([] { NoiseSpec::pairflip(0.3, {{0, 12}}).validate(10); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { NoiseSpec::pairflip(0.3, {{4, 4}}).validate(10); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { NoiseSpec::symmetric(1.2).validate(10); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { NoiseSpec::symmetric(0.95).validate(10); }), ErrorKind::dominance);
  EXPECT_EQ(kind_of([] { NoiseSpec::groupshift(0.2, {{0, 1}, {1, 2}}).validate(3); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { NoiseSpec::groupshift(0.2, {{0, 1}}).validate(3); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { NoiseSpec::instance({1.0, 0.1, 0}).validate(3); }), ErrorKind::config);
}

TEST(Inject, ZeroRateIsIdentity) {
  const Dataset d = balanced(500, 4);
  for (const NoiseSpec& s : {NoiseSpec::symmetric(0.0), NoiseSpec::pairflip(0.0, {{0, 1}}),
                             NoiseSpec::instance({0.0, 0.0, 5})}) {
    const Dataset out = inject(d, s, 1);
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(out.samples[i].observed_label, d.samples[i].clean_label);
      EXPECT_FALSE(out.samples[i].flipped);
    }
    const auto tr = empirical_rates(d, out);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(tr.empirical_matrix[k][k], 1.0);
  }
}

TEST(Inject, SymmetricStatistics) {
  const Dataset d = balanced(100000, 10);
  const NoiseSpec spec = NoiseSpec::symmetric(0.4);
  const Dataset noisy = inject(d, spec, 2024);
  const auto tr = empirical_rates(d, noisy, spec);
  EXPECT_LT(tr.max_abs_diff, 0.01);
  for (const auto& s : noisy.samples) EXPECT_EQ(s.flipped, s.observed_label != s.clean_label);
}

TEST(Inject, PairFlipOnlyHitsMapTargets) {
  const Dataset d = balanced(100000, 10);
  const NoiseSpec spec = NoiseSpec::pairflip(0.3, cifar10_flip_map());
  const Dataset noisy = inject(d, spec, 5);
  const auto tr = empirical_rates(d, noisy, spec);
  EXPECT_LT(tr.max_abs_diff, 0.01);
  const auto m = cifar10_flip_map();
  for (std::size_t y = 0; y < 10; ++y) {
    for (std::size_t k = 0; k < 10; ++k) {
      const bool allowed = k == y || (m.contains(y) && m.at(y) == k);
      if (!allowed) {
        EXPECT_EQ(tr.empirical_matrix[y][k], 0.0) << y << "->" << k;
      }
    }
  }
}

TEST(Inject, BitReproducibleAndOrderIndependent) {
  const Dataset d = balanced(5000, 10);
  const NoiseSpec spec = NoiseSpec::symmetric(0.4);
  EXPECT_EQ(observed(inject(d, spec, 77)), observed(inject(d, spec, 77)));
  EXPECT_NE(observed(inject(d, spec, 77)), observed(inject(d, spec, 78)));

  // Sample i's decision depends only on (seed, i): a prefix gets the same labels.
  Dataset prefix = d;
  prefix.samples.resize(1000);
  const auto full = observed(inject(d, spec, 77));
  const auto head = observed(inject(prefix, spec, 77));
  EXPECT_TRUE(std::equal(head.begin(), head.end(), full.begin()));
}

TEST(InstanceNoise, OverallRate) {
  const Dataset d = balanced(100000, 10, 4);
  const NoiseSpec spec = NoiseSpec::instance({0.4, 0.1, 3});
  const Dataset noisy = inject(d, spec, 9);
  std::size_t flips = 0;
  for (const auto& s : noisy.samples) flips += s.flipped ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(flips) / 100000.0, 0.4, 0.01);
  const auto tr = empirical_rates(d, noisy, spec);
  EXPECT_TRUE(tr.matrix.empty());
  EXPECT_EQ(tr.max_abs_diff, 0.0);
}

TEST(InstanceNoise, DeterministicAndFeatureDriven) {
  const Dataset d = balanced(2000, 5, 3);
  const NoiseSpec spec = NoiseSpec::instance({0.3, 0.1, 11});
  EXPECT_EQ(observed(inject(d, spec, 4)), observed(inject(d, spec, 4)));
  // A different projection changes targets even with the same draw stream.
  const NoiseSpec other = NoiseSpec::instance({0.3, 0.1, 12});
  EXPECT_NE(observed(inject(d, spec, 4)), observed(inject(d, other, 4)));
}

TEST(EmpiricalRates, MisalignedDatasets) {
  const Dataset a = balanced(100, 4);
  Dataset b = a;
  b.samples.pop_back();
  EXPECT_EQ(kind_of([&] { empirical_rates(a, b); }), ErrorKind::invalid_input);
}

TEST(NoiseJson, RoundTrip) {
  for (const NoiseSpec& s : {NoiseSpec::symmetric(0.4), NoiseSpec::pairflip(0.3, cifar10_flip_map()),
                             NoiseSpec::groupshift(0.2, consecutive_groups(10, 5)),
                             NoiseSpec::instance({0.4, 0.1, 7})}) {
    EXPECT_EQ(noise_from_json(to_json(s)), s);
  }
  EXPECT_EQ(noise_from_json(nlohmann::json{{"kind", "pairflip"}, {"eta", 0.3}}),
            NoiseSpec::pairflip(0.3, cifar10_flip_map()));
  EXPECT_EQ(kind_of([] { noise_from_json(nlohmann::json{{"kind", "bursty"}}); }), ErrorKind::config);
}

TEST(Groups, Consecutive) {
  const auto g = consecutive_groups(100, 5);
  ASSERT_EQ(g.size(), 20u);
  EXPECT_EQ(g[3], (std::vector<std::size_t>{15, 16, 17, 18, 19}));
  // A short final group is kept as is.
  EXPECT_EQ(consecutive_groups(10, 3).back(), (std::vector<std::size_t>{9}));
  EXPECT_EQ(kind_of([] { consecutive_groups(10, 0); }), ErrorKind::config);
}
