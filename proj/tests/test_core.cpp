#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ssa/core.hpp"
#include "ssa/random.hpp"

using namespace ssa;

TEST(LogUnnormDensity, ZeroParameterGivesZero) {
  EXPECT_EQ(log_unnorm_density(ParameterVector{0, 0}, SufficientStatistics{45.3, 18.0}), 0.0);
}

TEST(LogUnnormDensity, UnitStatisticSelectsComponent) {
  EXPECT_DOUBLE_EQ(log_unnorm_density(ParameterVector{4.60, -0.69}, SufficientStatistics{1, 0}), 4.60);
}

TEST(LogUnnormDensity, HandDotProduct) {
  const double expected = 4.60 * 45.30 + (-0.69) * 17.99;
  EXPECT_NEAR(expected, 195.9669, 1e-10);
  EXPECT_NEAR(log_unnorm_density(ParameterVector{4.60, -0.69}, SufficientStatistics{45.30, 17.99}), 195.9669, 1e-10);
}

TEST(LogUnnormDensity, DimensionMismatchIsContractViolation) {
  EXPECT_THROW(log_unnorm_density(ParameterVector{1, 2}, SufficientStatistics{1, 2, 3}), ContractViolation);
}

TEST(LogUnnormDensity, LinearInTheta) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int rep = 0; rep < 200; ++rep) {
    ParameterVector a{u(gen), u(gen), u(gen)}, b{u(gen), u(gen), u(gen)};
    SufficientStatistics t{u(gen), u(gen), u(gen)};
    const double lhs = log_unnorm_density(a + b, t);
    const double rhs = log_unnorm_density(a, t) + log_unnorm_density(b, t);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(PriorBox, UnitBoxHasZeroLogDensity) {
  EXPECT_EQ(prior_log_density(PriorBox({0, 0}, {1, 1}), ParameterVector{0.5, 0.5}), 0.0);
}

TEST(PriorBox, OutsideIsMinusInfinity) {
  const double v = prior_log_density(PriorBox({0, -7}, {7, 0}), ParameterVector{8, -1});
  EXPECT_TRUE(std::isinf(v) && v < 0);
}

TEST(PriorBox, InsideIsMinusLogVolume) {
  EXPECT_NEAR(prior_log_density(PriorBox({0, -7}, {7, 0}), ParameterVector{4.6, -0.69}), -std::log(49.0), 1e-14);
}

TEST(PriorBox, ClosedBounds) {
  const PriorBox box({0, -7}, {7, 0});
  EXPECT_TRUE(box.contains(ParameterVector{0, -7}));
  EXPECT_TRUE(box.contains(ParameterVector{7, 0}));
  EXPECT_FALSE(box.contains(ParameterVector{7 + 1e-12, 0}));
}

TEST(PriorBox, ConstantInsideMinusInfinityOutside) {
  const PriorBox box({-1, 2, 0}, {1, 5, 0.5});
  const double inside = -std::log(2.0 * 3.0 * 0.5);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3, 6);
  for (int rep = 0; rep < 1000; ++rep) {
    ParameterVector th{u(gen), u(gen), u(gen)};
    const bool in = th[0] >= -1 && th[0] <= 1 && th[1] >= 2 && th[1] <= 5 && th[2] >= 0 && th[2] <= 0.5;
    const double v = box.log_density(th);
    if (in)
      EXPECT_NEAR(v, inside, 1e-14);
    else
      EXPECT_EQ(v, -std::numeric_limits<double>::infinity());
  }
}

TEST(PriorBox, RejectsDegenerateBounds) {
  EXPECT_THROW(PriorBox({0, 0}, {1, 0}), ContractViolation);
  EXPECT_THROW(PriorBox({0}, {1, 2}), ContractViolation);
}

TEST(Window, VolumeAndContainment) {
  const Window w = Window::box2(0, 3, 0, 1);
  EXPECT_DOUBLE_EQ(w.volume(), 3.0);
  EXPECT_TRUE(w.contains({3, 1, 0}));
  EXPECT_FALSE(w.contains({3.1, 0.5, 0}));
  const Window c = Window::box3({0, 0, 0}, {2, 2, 2});
  EXPECT_DOUBLE_EQ(c.volume(), 8.0);
  EXPECT_THROW(Window::box2(1, 0, 0, 1), ContractViolation);
}

TEST(PatternValidate, EmptyPatternIsOk) {
  EXPECT_FALSE(validate(Pattern(Window::unit_square(), std::vector<Point>{})).has_value());
}

TEST(PatternValidate, OutOfWindowPointReported) {
  const auto v = validate(Pattern(Window::unit_square(), std::vector<Point>{{1.5, 0.5, 0}}));
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->index, 0u);
  EXPECT_EQ(v->reason, "out-of-window");
}

TEST(PatternValidate, FirstViolationIndex) {
  const auto v = validate(Pattern(Window::unit_square(), std::vector<Point>{{0.5, 0.5, 0}, {0.2, 0.1, 0}, {0.5, -0.1, 0}}));
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->index, 2u);
}

TEST(Segment, OrientationNormalizedModPi) {
  const Segment s({0.5, 0.5, 0}, 3 * std::numbers::pi / 2, 0.12);
  EXPECT_NEAR(s.orientation(), std::numbers::pi / 2, 1e-12);
  EXPECT_FALSE(validate(Pattern(Window::unit_square(), std::vector<Segment>{s})).has_value());
  EXPECT_NEAR(Segment({0, 0, 0}, -0.25, 1).orientation(), std::numbers::pi - 0.25, 1e-12);
  EXPECT_EQ(Segment({0, 0, 0}, std::numbers::pi, 1).orientation(), 0.0);
}

TEST(Segment, Endpoints) {
  const Segment s({1, 2, 0}, std::numbers::pi / 2, 0.2);
  const auto e = s.endpoints();
  EXPECT_NEAR(e[0].x, 1, 1e-12);
  EXPECT_NEAR(e[0].y, 1.9, 1e-12);
  EXPECT_NEAR(e[1].y, 2.1, 1e-12);
  EXPECT_THROW(Segment({0, 0, 0}, 0, 0), ContractViolation);
}

TEST(Random, DerivedSeedsDifferAndAreStable) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Random, UniformInUnitIntervalAndBelowInRange) {
  Rng rng(5);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    ASSERT_LT(rng.below(7), 7u);
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}
