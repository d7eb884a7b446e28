#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "asymloss/error.hpp"
#include "asymloss/noise.hpp"
#include "asymloss/verifier.hpp"

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

AsymmetryWeights symmetric_weights(double eta, std::size_t K) {
  return weights_from_noise(NoiseSpec::symmetric(eta), ClassLabel{0}, K);
}

}  // namespace

TEST(Weights, DominanceIsStrict) {
  EXPECT_NO_THROW(AsymmetryWeights::make({0.6, 0.2, 0.2}, ClassLabel{0}));
  EXPECT_EQ(kind_of([] { AsymmetryWeights::make({0.4, 0.4, 0.2}, ClassLabel{0}); }), ErrorKind::dominance);
  EXPECT_EQ(kind_of([] { AsymmetryWeights::make({0.2, 0.4, 0.4}, ClassLabel{0}); }), ErrorKind::dominance);
  EXPECT_EQ(kind_of([] { AsymmetryWeights::make({0.5, -0.1}, ClassLabel{0}); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { AsymmetryWeights::make({0.5, 0.1}, ClassLabel{2}); }), ErrorKind::config);
}

TEST(Weights, RunnerUpPrefersLowestTiedIndex) {
  const auto w = AsymmetryWeights::make({0.1, 0.3, 0.3, 0.3, 0.9}, ClassLabel{4});
  EXPECT_EQ(w.runner_up(), 1u);
  EXPECT_DOUBLE_EQ(w.ratio(), 3.0);
}

TEST(Threshold, BoundaryCaseIsSatisfiedExactly) {
  const auto w = symmetric_weights(0.8, 10);
  EXPECT_NEAR(theorem_threshold(2.0, 9.0, w), 2.25, 1e-12);
  EXPECT_NEAR(w.ratio(), 2.25, 1e-12);
  EXPECT_TRUE(theorem_satisfied(2.0, 9.0, w));
  EXPECT_FALSE(theorem_satisfied(2.0, 8.9, w));
}

TEST(Threshold, UnitExponentIsOne) {
  for (double a : {1.0, 1.5, 30.0}) {
    EXPECT_DOUBLE_EQ(theorem_threshold(1.0, a, symmetric_weights(0.4, 10)), 1.0);
    EXPECT_DOUBLE_EQ(theorem_threshold(0.5, a, AsymmetryWeights::dominant({0.5, 0.3, 0.2})), 1.0);
  }
}

TEST(Threshold, SlackAtLargerMagnitude) {
  const auto w = symmetric_weights(0.8, 10);
  EXPECT_NEAR(theorem_threshold(2.0, 10.0, w), 2.111111111111111, 1e-12);
  EXPECT_TRUE(theorem_satisfied(2.0, 10.0, w));
}

TEST(Threshold, UnitMagnitudeIsUnsatisfiable) {
  const auto w = symmetric_weights(0.4, 10);
  EXPECT_EQ(kind_of([&] { theorem_threshold(2.0, 1.0, w); }), ErrorKind::unsatisfiable);
  EXPECT_FALSE(theorem_satisfied(2.0, 1.0, w));
  EXPECT_TRUE(theorem_satisfied(1.0, 1.0, w));
}

TEST(Threshold, NoiselessIsTriviallySatisfied) {
  const auto w = symmetric_weights(0.0, 10);
  EXPECT_DOUBLE_EQ(theorem_threshold(3.0, 1.5, w), 0.0);
  EXPECT_TRUE(theorem_satisfied(3.0, 1.5, w));
  EXPECT_TRUE(std::isinf(w.ratio()));
}

TEST(SupH, MatchesClosedForm) {
  const auto w8 = symmetric_weights(0.8, 10);
  EXPECT_NEAR(sup_h(2.0, 10.0, w8), 2.111111111111111, 1e-3);
  EXPECT_NEAR(sup_h(2.0, 9.0, w8), 2.25, 1e-3);
  EXPECT_NEAR(sup_h(1.0, 5.0, AsymmetryWeights::dominant({0.6, 0.2, 0.2})), 1.0, 1e-6);
  for (double q : {1.5, 2.0, 3.0}) {
    for (double a : {1.5, 2.0, 5.0, 30.0}) {
      const auto w = AsymmetryWeights::dominant({0.5, 0.3, 0.1, 0.1});
      const double closed = theorem_threshold(q, a, w);
      EXPECT_NEAR(sup_h(q, a, w), closed, 1e-3 * std::max(1.0, closed)) << "q=" << q << " a=" << a;
    }
  }
}

TEST(SupH, RejectsCoarseGrid) {
  EXPECT_EQ(kind_of([] { sup_h(2.0, 5.0, AsymmetryWeights::dominant({0.6, 0.4}), 10); }), ErrorKind::config);
}

TEST(Oracle, VertexWhenThresholdHolds) {
  const auto w = AsymmetryWeights::dominant({0.6, 0.2, 0.2});
  const OracleResult r = oracle_minimize(LossSpec::amse(10.0, 2.0), w, 200);
  EXPECT_TRUE(r.is_dominant_vertex);
  EXPECT_EQ(r.argmin.vec(), (std::vector<double>{1.0, 0.0, 0.0}));
  EXPECT_DOUBLE_EQ(r.objective, r.vertex_objective);
  EXPECT_EQ(r.points, 1u + 201u * 202u / 2u);
}

TEST(Oracle, InteriorWhenThresholdFails) {
  const auto w = symmetric_weights(0.8, 10);
  EXPECT_NEAR(theorem_threshold(2.0, 2.0, w), 11.0, 1e-12);
  const OracleResult r = oracle_minimize(LossSpec::amse(2.0, 2.0), w, 10000);
  EXPECT_FALSE(r.is_dominant_vertex);
  EXPECT_LT(r.objective, r.vertex_objective);
}

TEST(Oracle, SymmetricLossIsCompletelyAsymmetric) {
  for (const auto& w : {AsymmetryWeights::dominant({0.4, 0.35, 0.25}), symmetric_weights(0.6, 10)}) {
    const OracleResult r = oracle_minimize(LossSpec::mae(), w, w.size() <= 4 ? 200 : 2000);
    EXPECT_TRUE(r.is_dominant_vertex);
  }
}

TEST(Oracle, RejectsCoarseResolution) {
  EXPECT_EQ(kind_of([] { oracle_minimize(LossSpec::mae(), AsymmetryWeights::dominant({0.6, 0.4}), 5); }),
            ErrorKind::config);
}

TEST(Verify, AgreesAcrossTheBoundary) {
  const auto w = symmetric_weights(0.8, 10);
  const AsymmetryVerdict below = verify_amse(2.0, 8.9, w, 10000);
  const AsymmetryVerdict at = verify_amse(2.0, 9.0, w, 10000);
  EXPECT_FALSE(below.theorem_satisfied);
  EXPECT_FALSE(below.oracle_is_vertex);
  EXPECT_TRUE(at.theorem_satisfied);
  EXPECT_TRUE(at.oracle_is_vertex);
  EXPECT_TRUE(below.oracle_agrees);
  EXPECT_TRUE(at.oracle_agrees);
  const auto j = to_json(at);
  EXPECT_TRUE(j.contains("required_ratio"));
}

TEST(Verify, UnsatisfiableReportsInfiniteThreshold) {
  const AsymmetryVerdict v = verify_amse(2.0, 1.0, AsymmetryWeights::dominant({0.5, 0.3, 0.2}), 200);
  EXPECT_TRUE(std::isinf(v.required_ratio));
  EXPECT_FALSE(v.theorem_satisfied);
  EXPECT_TRUE(v.oracle_agrees);
}

TEST(Symmetry, Constants) {
  const SymmetryReport mae = check_symmetric(LossSpec::mae(), 5, 200);
  EXPECT_TRUE(mae.is_symmetric);
  EXPECT_NEAR(mae.constant_C, 8.0, 1e-9);
  const SymmetryReport nce = check_symmetric(LossSpec::nce(), 7, 200);
  EXPECT_TRUE(nce.is_symmetric);
  EXPECT_NEAR(nce.constant_C, 1.0, 1e-9);
  const SymmetryReport ce = check_symmetric(LossSpec::ce(), 2, 200);
  EXPECT_FALSE(ce.is_symmetric);
  EXPECT_GT(ce.max_deviation, 0.1);
}

TEST(NoiseWeights, Rows) {
  const auto sym = weights_from_noise(NoiseSpec::symmetric(0.8), ClassLabel{3}, 10);
  EXPECT_EQ(sym.t.index, 3u);
  EXPECT_NEAR(sym.w[3], 0.2, 1e-15);
  EXPECT_NEAR(sym.w[0], 0.0888888888888889, 1e-15);

  const auto clean = weights_from_noise(NoiseSpec::symmetric(0.0), ClassLabel{1}, 4);
  EXPECT_EQ(clean.w, (std::vector<double>{0, 1, 0, 0}));

  const auto pf = weights_from_noise(NoiseSpec::pairflip(0.4, {{2, 0}}), ClassLabel{2}, 4);
  EXPECT_EQ(pf.w, (std::vector<double>{0.4, 0, 0.6, 0}));

  EXPECT_EQ(kind_of([] { weights_from_noise(NoiseSpec::pairflip(0.4, {{0, 5}}), ClassLabel{0}, 2); }),
            ErrorKind::config);
}

TEST(NoiseWeights, NonDominantRowRaisesDominance) {
  // eta = 0.8 over K = 3: keep 0.2, each other 0.4.
  EXPECT_EQ(kind_of([] { weights_from_noise(NoiseSpec::symmetric(0.8), ClassLabel{0}, 3); }), ErrorKind::dominance);
  EXPECT_EQ(kind_of([] { weights_from_noise(NoiseSpec::pairflip(0.5, {{0, 1}}), ClassLabel{0}, 2); }),
            ErrorKind::dominance);
}

TEST(Probe, JalPassesAndCeFails) {
  const NoiseSpec noise = NoiseSpec::symmetric(0.4);
  const auto jal = noise_tolerance_probe(make_jal(JalFlavor::ce, 1, 1, 30), noise, 10, 2000);
  ASSERT_EQ(jal.size(), 10u);
  for (const auto& v : jal) EXPECT_TRUE(v.passed) << "class " << v.y.index;
  const auto ce = noise_tolerance_probe(LossSpec::ce(), noise, 10, 2000);
  for (const auto& v : ce) EXPECT_FALSE(v.passed) << "class " << v.y.index;
}

TEST(Probe, AmsePassesUnderPairFlip) {
  const NoiseSpec noise = NoiseSpec::pairflip(0.45, cifar10_flip_map());
  for (std::size_t y = 0; y < 10; ++y) {
    const auto w = weights_from_noise(noise, ClassLabel{y}, 10);
    EXPECT_TRUE(theorem_satisfied(2.0, 30.0, w)) << y;
  }
  EXPECT_NEAR(theorem_threshold(2.0, 30.0, weights_from_noise(noise, ClassLabel{9}, 10)), 31.0 / 29.0, 1e-12);
  for (const auto& v : noise_tolerance_probe(LossSpec::amse(30.0, 2.0), noise, 10, 2000)) {
    EXPECT_TRUE(v.passed) << v.y.index;
  }
}
