#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "asymloss/core.hpp"
#include "asymloss/error.hpp"
#include "asymloss/rng.hpp"

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

}  // namespace

TEST(Softmax, ZeroLogitsGiveUniform) {
  const std::vector<double> z{0.0, 0.0};
  const ProbVector p = softmax(z);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, ShiftInvariant) {
  for (double c : {-700.0, -3.0, 0.0, 2.5, 800.0}) {
    const std::vector<double> z(4, c);
    const ProbVector p = softmax(z);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(p[k], 0.25, 1e-15);
  }
}

TEST(Softmax, TwoClassValue) {
  const std::vector<double> z{1.0, 0.0};
  const ProbVector p = softmax(z);
  EXPECT_NEAR(p[0], 0.731058578630004879, 1e-15);
  EXPECT_NEAR(p[1], 0.268941421369995121, 1e-15);
}

TEST(Softmax, RejectsNonFiniteAndShortInput) {
  const std::vector<double> bad{1.0, std::nan("")};
  EXPECT_EQ(kind_of([&] { softmax(bad); }), ErrorKind::invalid_input);
  const std::vector<double> inf{1.0, INFINITY};
  EXPECT_EQ(kind_of([&] { softmax(inf); }), ErrorKind::invalid_input);
  const std::vector<double> one{1.0};
  EXPECT_EQ(kind_of([&] { softmax(one); }), ErrorKind::invalid_input);
}

TEST(Softmax, LargeLogitsStayOnSimplex) {
  const std::vector<double> z{1000.0, -1000.0, 0.0};
  const ProbVector p = softmax(z);
  EXPECT_TRUE(ProbVector::is_valid(p.values()));
  EXPECT_DOUBLE_EQ(p[0], 1.0);
}

TEST(OneHot, Basic) {
  EXPECT_EQ(one_hot(ClassLabel{0}, 3).vec(), (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(one_hot(ClassLabel{2}, 3).vec(), (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(kind_of([] { one_hot(ClassLabel{3}, 3); }), ErrorKind::invalid_input);
}

TEST(ProbVector, Validation) {
  EXPECT_NO_THROW(ProbVector::from({0.2, 0.8}));
  EXPECT_NO_THROW(ProbVector::from({0.2, 0.8 + 5e-10}));
  EXPECT_EQ(kind_of([] { ProbVector::from({0.2, 0.7}); }), ErrorKind::invalid_input);
  EXPECT_EQ(kind_of([] { ProbVector::from({-0.1, 1.1}); }), ErrorKind::invalid_input);
  EXPECT_EQ(kind_of([] { ProbVector::from({}); }), ErrorKind::invalid_input);
}

TEST(ClampSimplex, VertexMovesInside) {
  const ProbVector p = clamp_simplex(ProbVector::from({1.0, 0.0}), 1e-7);
  EXPECT_NEAR(p[0], 1.0 - 1e-7, 1e-12);
  EXPECT_NEAR(p[1], 1e-7, 1e-12);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

TEST(ClampSimplex, InteriorIsFixed) {
  const ProbVector p = clamp_simplex(ProbVector::from({0.5, 0.5}), 1e-7);
  EXPECT_EQ(p.vec(), (std::vector<double>{0.5, 0.5}));
}

TEST(ClampSimplex, ClampThenRenormalize) {
  const ProbVector p = clamp_simplex(ProbVector::from({1.0, 0.0, 0.0}), 0.01);
  EXPECT_NEAR(p[0], 0.980392156862745098, 1e-12);
  EXPECT_NEAR(p[1], 0.009803921568627451, 1e-12);
  EXPECT_NEAR(p[2], 0.009803921568627451, 1e-12);
}

TEST(ClampSimplex, Idempotent) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t K = 2 + rng.uniform_index(8);
    std::vector<double> v(K);
    for (double& x : v) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    if (std::accumulate(v.begin(), v.end(), 0.0) == 0.0) v[0] = 1.0;
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= s;
    const ProbVector once = clamp_simplex(ProbVector::from(v), 1e-3);
    const ProbVector twice = clamp_simplex(once, 1e-3);
    EXPECT_EQ(once.vec(), twice.vec());
    EXPECT_TRUE(ProbVector::is_valid(once.values()));
  }
}

TEST(ClampSimplex, RejectsBadEpsilon) {
  const ProbVector p = ProbVector::from({0.5, 0.5});
  EXPECT_EQ(kind_of([&] { clamp_simplex(p, 0.0); }), ErrorKind::invalid_input);
  EXPECT_EQ(kind_of([&] { clamp_simplex(p, 0.5); }), ErrorKind::invalid_input);
}

TEST(Dataset, ValidateCatchesInconsistencies) {
  Dataset d;
  d.num_classes = 2;
  d.feature_dim = 1;
  d.samples.push_back({{0.0}, ClassLabel{0}, ClassLabel{0}, false});
  EXPECT_NO_THROW(d.validate());
  d.samples.push_back({{0.0}, ClassLabel{1}, ClassLabel{0}, false});
  EXPECT_EQ(kind_of([&] { d.validate(); }), ErrorKind::invalid_input);
  d.samples.back().flipped = true;
  EXPECT_NO_THROW(d.validate());
  d.samples.push_back({{0.0, 1.0}, ClassLabel{1}, ClassLabel{1}, false});
  EXPECT_EQ(kind_of([&] { d.validate(); }), ErrorKind::invalid_input);
}

TEST(Rng, MatchesReferenceSplitMix64) {
  Rng rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
  Rng r42(42);
  EXPECT_DOUBLE_EQ(r42.uniform(), 0.7415648787718233);
}

TEST(Rng, SubstreamsAreDeterministicAndDistinct) {
  Rng a = Rng::substream(5, 3);
  Rng b = Rng::substream(5, 3);
  EXPECT_EQ(a.next(), b.next());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 1000; ++i) firsts.insert(Rng::substream(5, i).next());
  EXPECT_EQ(firsts.size(), 1000u);
  EXPECT_NE(Rng::substream(5, 0).next(), Rng::substream(6, 0).next());
}

TEST(Rng, UniformIndexInRangeAndUnbiasedEnough) {
  Rng rng(11);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const std::size_t k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, NormalMoments) {
  Rng rng(3);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.015);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(9);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
  std::vector<int> same(100);
  std::iota(same.begin(), same.end(), 0);
  Rng again(9);
  again.shuffle(same);
  EXPECT_EQ(v, same);
}

TEST(Error, ExitCodes) {
  EXPECT_EQ(exit_code_for(ErrorKind::config), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::dominance), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::unsatisfiable), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::numeric), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::invalid_input), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::io), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::format), 3);
}
