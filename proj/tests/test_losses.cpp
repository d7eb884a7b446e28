#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "asymloss/error.hpp"
#include "asymloss/losses.hpp"
#include "asymloss/rng.hpp"
#include "asymloss/trainer.hpp"

using namespace asymloss;

namespace {

ProbVector random_simplex(Rng& rng, std::size_t K) {
  std::vector<double> v(K);
  double total = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform());
    total += x;
  }
  for (double& x : v) x /= total;
  return ProbVector::trusted(std::move(v));
}

double row_sum(const LossSpec& spec, const ProbVector& p) {
  const auto row = loss_row(spec, p);
  return std::accumulate(row.begin(), row.end(), 0.0);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an asymloss::Error";
  return ErrorKind::numeric;
}

const ProbVector kP82 = ProbVector::from({0.8, 0.2});

}  // namespace

TEST(LossValue, AmseAtVertexWithUnitMagnitudeIsZero) {
  EXPECT_DOUBLE_EQ(loss_value(LossSpec::amse(1.0, 2.0), ProbVector::from({0, 1, 0}), ClassLabel{1}), 0.0);
  EXPECT_DOUBLE_EQ(loss_value(LossSpec::mse(), ProbVector::from({0, 1, 0}), ClassLabel{1}), 0.0);
}

TEST(LossValue, AmseTwoClass) {
  EXPECT_NEAR(loss_value(LossSpec::amse(2.0, 2.0), kP82, ClassLabel{0}), 0.74, 1e-15);
}

TEST(LossValue, MseIsScaledSquaredDistance) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const ProbVector p = random_simplex(rng, 6);
    double d = 0.0;
    for (std::size_t k = 0; k < 6; ++k) d += (p[k] - (k == 2 ? 1.0 : 0.0)) * (p[k] - (k == 2 ? 1.0 : 0.0));
    EXPECT_NEAR(loss_value(LossSpec::mse(), p, ClassLabel{2}), d / 6.0, 1e-15);
  }
}

TEST(LossValue, RceIsScaledMae) {
  EXPECT_NEAR(loss_value(LossSpec::rce(-4.0), kP82, ClassLabel{0}), 0.8, 1e-12);
  EXPECT_NEAR(loss_value(LossSpec::mae(), kP82, ClassLabel{0}), 0.4, 1e-15);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const ProbVector p = random_simplex(rng, 5);
    EXPECT_NEAR(loss_value(LossSpec::rce(-4.0), p, ClassLabel{3}), 2.0 * loss_value(LossSpec::mae(), p, ClassLabel{3}),
                1e-12);
  }
}

TEST(LossValue, NormalizedCeTwoClass) {
  EXPECT_NEAR(loss_value(LossSpec::nce(), kP82, ClassLabel{0}), 0.121764601316985, 1e-12);
}

TEST(LossValue, FocalReferenceValue) {
  EXPECT_NEAR(loss_value(LossSpec::focal(0.5), kP82, ClassLabel{0}), 0.0997928298958571, 1e-12);
  // gamma = 0 is CE.
  EXPECT_NEAR(loss_value(LossSpec::focal(0.0), kP82, ClassLabel{0}), 0.223143551314209756, 1e-12);
}

TEST(LossValue, CeClampsAtZeroProbability) {
  const double v = loss_value(LossSpec::ce(), ProbVector::from({1.0, 0.0}), ClassLabel{1});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, -std::log(1e-7), 1e-5);
}

TEST(LossRow, CeUniform) {
  const auto row = loss_row(LossSpec::ce(), ProbVector::from({0.25, 0.25, 0.25, 0.25}));
  for (double v : row) EXPECT_NEAR(v, 1.386294361119890619, 1e-14);
}

TEST(LossRow, MaeSumsToTwoKMinusOne) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(row_sum(LossSpec::mae(), random_simplex(rng, 3)), 4.0, 1e-12);
}

TEST(LossRow, NormalizedLossesSumToOne) {
  Rng rng(4);
  for (std::size_t K : {2u, 7u, 30u}) {
    for (int i = 0; i < 50; ++i) {
      const ProbVector p = random_simplex(rng, K);
      EXPECT_NEAR(row_sum(LossSpec::nce(), p), 1.0, 1e-12);
      EXPECT_NEAR(row_sum(LossSpec::nfl(0.5), p), 1.0, 1e-12);
      EXPECT_NEAR(row_sum(LossSpec::normalized(LossSpec::amse(3.0, 2.0)), p), 1.0, 1e-12);
    }
  }
}

TEST(LossTerms, ActivePassiveDefinitions) {
  const ProbVector p = ProbVector::from({0.1, 0.6, 0.3});
  for (const LossSpec& active : {LossSpec::ce(), LossSpec::focal(0.5), LossSpec::nce()}) {
    const auto terms = loss_terms(active, p, ClassLabel{1});
    EXPECT_EQ(terms[0], 0.0) << loss_name(active);
    EXPECT_EQ(terms[2], 0.0) << loss_name(active);
    EXPECT_TRUE(taxonomy(active).is_active);
    EXPECT_FALSE(taxonomy(active).is_passive);
  }
  for (const LossSpec& passive : {LossSpec::mae(), LossSpec::rce(-4.0), LossSpec::amse(10.0, 2.0)}) {
    const auto terms = loss_terms(passive, p, ClassLabel{1});
    EXPECT_GT(terms[0] + terms[2], 0.0) << loss_name(passive);
    EXPECT_TRUE(taxonomy(passive).is_passive);
  }
  const auto all = loss_terms(LossSpec::amse(10.0, 2.0), p, ClassLabel{1});
  EXPECT_NEAR(std::accumulate(all.begin(), all.end(), 0.0), loss_value(LossSpec::amse(10.0, 2.0), p, ClassLabel{1}),
              1e-14);
}

TEST(LossTaxonomy, Symmetric) {
  EXPECT_TRUE(taxonomy(LossSpec::mae()).is_symmetric);
  EXPECT_TRUE(taxonomy(LossSpec::nce()).is_symmetric);
  EXPECT_TRUE(taxonomy(LossSpec::rce(-4.0)).is_symmetric);
  EXPECT_FALSE(taxonomy(LossSpec::ce()).is_symmetric);
  EXPECT_FALSE(taxonomy(LossSpec::amse(30.0, 2.0)).is_symmetric);
}

TEST(LossGrad, AmseTwoClass) {
  const auto g = loss_grad_p(LossSpec::amse(2.0, 2.0), kP82, ClassLabel{0});
  EXPECT_NEAR(g[0], -1.2, 1e-15);
  EXPECT_NEAR(g[1], 0.2, 1e-15);
}

TEST(LossGrad, CeAtUniform) {
  const auto g = loss_grad_p(LossSpec::ce(), ProbVector::from({0.5, 0.5}), ClassLabel{0});
  EXPECT_DOUBLE_EQ(g[0], -2.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(LossGrad, CeLogitGradientIsPMinusOneHot) {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> z(6);
    for (double& v : z) v = 3.0 * rng.normal();
    const ProbVector p = softmax(z);
    const auto g = loss_grad_logits(LossSpec::ce(), z, ClassLabel{4});
    for (std::size_t k = 0; k < 6; ++k) {
      if (p[4] < 1e-6) continue;  // clamp is active, the identity no longer holds
      EXPECT_NEAR(g[k], p[k] - (k == 4 ? 1.0 : 0.0), 1e-12);
    }
  }
}

TEST(LossGrad, AmseThroughSoftmaxMatchesFiniteDifferences) {
  Rng rng(6);
  const LossSpec spec = LossSpec::amse(10.0, 2.0);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> z(3);
    for (double& v : z) v = rng.normal();
    const auto g = loss_grad_logits(spec, z, ClassLabel{1});
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      auto zp = z;
      auto zm = z;
      zp[k] += 1e-6;
      zm[k] -= 1e-6;
      const double fd = (loss_value(spec, softmax(zp), ClassLabel{1}) - loss_value(spec, softmax(zm), ClassLabel{1})) / 2e-6;
      worst = std::max(worst, std::abs(fd - g[k]));
      scale = std::max(scale, std::abs(fd));
    }
    EXPECT_LT(worst / std::max(scale, 1e-8), 1e-5);
  }
}

TEST(LossGrad, SubUnitExponentAtZeroResidualIsNumericError) {
  // p_k = a e_k exactly for k != y: residual zero, derivative infinite.
  const ProbVector p = ProbVector::from({1.0, 0.0});
  EXPECT_EQ(kind_of([&] { loss_grad_p(LossSpec::amse(1.0, 0.5), p, ClassLabel{0}); }), ErrorKind::numeric);
}

TEST(LossGrad, EveryKindMatchesFiniteDifferences) {
  const std::vector<LossSpec> specs{LossSpec::ce(),
                                    LossSpec::focal(0.5),
                                    LossSpec::mae(),
                                    LossSpec::mse(),
                                    LossSpec::rce(-4.0),
                                    LossSpec::nce(),
                                    LossSpec::nfl(0.5),
                                    LossSpec::amse(1.5, 3.0),
                                    make_jal(JalFlavor::ce, 1, 1, 30),
                                    make_jal(JalFlavor::focal, 1, 1, 30, 0.5)};
  for (const auto& spec : specs) {
    const GradCheckResult r = gradient_check(spec, 20, {2, 10}, 17);
    EXPECT_LT(r.max_rel_err_p, 1e-5) << loss_name(spec);
    EXPECT_LT(r.max_rel_err_logits, 1e-5) << loss_name(spec);
  }
}

TEST(LossSpec, ValidationRejectsOutOfDomain) {
  EXPECT_EQ(kind_of([] { LossSpec::amse(0.5, 2.0); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { LossSpec::amse(2.0, 0.0); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { LossSpec::focal(-1.0); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { LossSpec::rce(1.0); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { make_jal(JalFlavor::ce, -1, 1, 30); }), ErrorKind::config);
  LossSpec bad = LossSpec::ce();
  bad.kind = LossKind::apl;
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::config);
}

TEST(Jal, IsNormalizedActivePlusAmse) {
  const LossSpec jal = make_jal(JalFlavor::ce, 1, 1, 30);
  EXPECT_EQ(loss_name(jal), "JAL-CE");
  EXPECT_EQ(loss_name(make_jal(JalFlavor::focal, 1, 1, 30, 0.5)), "JAL-FL");
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const ProbVector p = random_simplex(rng, 10);
    EXPECT_NEAR(loss_value(jal, p, ClassLabel{2}),
                loss_value(LossSpec::nce(), p, ClassLabel{2}) + loss_value(LossSpec::amse(30, 2), p, ClassLabel{2}),
                1e-12);
  }
  const LossSpec weighted = make_jal(JalFlavor::ce, 2.0, 0.5, 10);
  const ProbVector p = random_simplex(rng, 4);
  EXPECT_NEAR(loss_value(weighted, p, ClassLabel{0}),
              2.0 * loss_value(LossSpec::nce(), p, ClassLabel{0}) + 0.5 * loss_value(LossSpec::amse(10, 2), p, ClassLabel{0}),
              1e-12);
}

TEST(Names, Display) {
  EXPECT_EQ(loss_name(LossSpec::ce()), "CE");
  EXPECT_EQ(loss_name(LossSpec::nfl()), "NFL");
  EXPECT_EQ(loss_name(LossSpec::amse(3, 2)), "AMSE");
  EXPECT_EQ(loss_name(LossSpec::normalized(LossSpec::mae())), "Norm(MAE)");
}

TEST(LossJson, RoundTrip) {
  const std::vector<LossSpec> specs{LossSpec::ce(), LossSpec::focal(0.7), LossSpec::rce(-2.0), LossSpec::amse(5, 3),
                                    LossSpec::nce(), make_jal(JalFlavor::focal, 1, 2, 20, 0.5),
                                    LossSpec::apl(1, LossSpec::nce(), 1, LossSpec::mae())};
  for (const auto& s : specs) EXPECT_EQ(loss_from_json(to_json(s)), s) << loss_name(s);
}

TEST(LossJson, ShorthandsAndErrors) {
  const LossSpec jal = loss_from_json(nlohmann::json{{"kind", "jal_ce"}});
  EXPECT_EQ(jal, make_jal(JalFlavor::ce, 1, 1, 30));
  EXPECT_EQ(parse_loss_arg("JAL-FL"), make_jal(JalFlavor::focal, 1, 1, 30, 0.5));
  EXPECT_EQ(parse_loss_arg("amse"), LossSpec::amse(30, 2));
  EXPECT_EQ(loss_from_json("jal-ce"), jal);
  EXPECT_EQ(parse_loss_arg(R"({"kind":"amse","params":{"a":7}})"), LossSpec::amse(7, 2));
  EXPECT_EQ(kind_of([] { parse_loss_arg("hinge"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_loss_arg("{not json"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { loss_from_json(nlohmann::json{{"kind", "amse"}, {"params", {{"a", "x"}}}}); }),
            ErrorKind::config);
}
