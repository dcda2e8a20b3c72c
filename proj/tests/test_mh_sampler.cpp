#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "ssa/analysis.hpp"
#include "ssa/mh_sampler.hpp"

using namespace ssa;

namespace {

const Window kSquare = Window::unit_square();

double poisson_pmf(int n, double lambda) { return std::exp(n * std::log(lambda) - lambda - std::lgamma(n + 1.0)); }

}  // namespace

TEST(MhStep, ZeroParameterBirthRatioIsExact) {
  const StraussModel m(0.1);
  const Window w = Window::box2(0, 2, 0, 1.5);
  ChainState<StraussModel> chain(m, w, {}, 3);
  const MoveMix mix{0.5, 0.3, 0.2};
  int births = 0;
  for (int s = 0; s < 2000; ++s) {
    const double n = static_cast<double>(chain.items().size());
    const auto res = mh_step(ParameterVector{0, 0}, chain, mix);
    if (res.type != MoveType::birth) continue;
    ++births;
    ASSERT_DOUBLE_EQ(res.ratio, w.volume() * (0.3 / 0.5) / (n + 1.0));
  }
  EXPECT_GT(births, 500);
}

TEST(MhStep, DeathOnEmptyPatternIsRejected) {
  ChainState<StraussModel> chain(StraussModel(0.1), kSquare, {}, 1);
  for (int s = 0; s < 20; ++s) {
    const auto res = mh_step(ParameterVector{0, 0}, chain, MoveMix{0.0, 1.0, 0.0});
    EXPECT_EQ(res.type, MoveType::death);
    EXPECT_FALSE(res.accepted);
  }
  EXPECT_TRUE(chain.items().empty());
}

TEST(MhStep, DimensionMismatchIsContractViolation) {
  ChainState<StraussModel> chain(StraussModel(0.1), kSquare, {}, 1);
  EXPECT_THROW(mh_step(ParameterVector{0, 0, 0}, chain), ContractViolation);
}

TEST(SamplePattern, ZeroStepsReturnsInit) {
  const Pattern init(kSquare, std::vector<Point>{{0.1, 0.2, 0}, {0.7, 0.3, 0}});
  const auto out = sample_pattern(StraussModel(0.1), ParameterVector{1, -1}, 0, init, 5);
  EXPECT_EQ(out.points(), init.points());
}

TEST(SamplePattern, DeterministicUnderSeed) {
  const Pattern init(kSquare, std::vector<Point>{});
  const AreaInteractionModel m(0.05);
  const auto a = sample_pattern(m, ParameterVector{4, 1}, 5000, init, 42);
  const auto b = sample_pattern(m, ParameterVector{4, 1}, 5000, init, 42);
  const auto c = sample_pattern(m, ParameterVector{4, 1}, 5000, init, 43);
  EXPECT_EQ(a.points(), b.points());
  EXPECT_NE(a.points(), c.points());
}

TEST(SamplePattern, ItemsStayInWindow) {
  const CandyModel m{CandyParams{}};
  const Window w = Window::box2(0, 3, 0, 1);
  const auto out = sample_pattern(m, ParameterVector{10, 6, 2, -1}, 20000, Pattern(w, std::vector<Segment>{}), 9);
  EXPECT_FALSE(validate(out).has_value());
}

template <class M>
void expect_cached_statistics_match(const M& m, const Window& w, const ParameterVector& theta, double tol) {
  ChainState<M> chain(m, w, {}, 77);
  chain.run(theta, MoveMix{}, 10000);
  const auto full = m.statistics(w, chain.items());
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_NEAR(chain.statistics()[i], full[i], tol) << "component " << i;
}

TEST(ChainState, CachedStatisticsDoNotDrift) {
  expect_cached_statistics_match(StraussModel(0.1), kSquare, ParameterVector{std::log(100.0), std::log(0.5)}, 0.0);
  expect_cached_statistics_match(AreaInteractionModel(0.05, 0.0025, true), kSquare, ParameterVector{5.29, 1.0}, 1e-6);
  expect_cached_statistics_match(CandyModel(CandyParams{}), Window::box2(0, 3, 0, 1), ParameterVector{10, 6, 2, -1}, 0.0);
  const SpineSet f{{{{0.2, 0.2, 0.0}, {0.2, 0.8, 1.0}}, {{0.9, 0.1, 0.5}, {0.5, 0.9, 0.5}}}};
  expect_cached_statistics_match(GalaxyModel(0.05, f, 0.005), Window::box3({0, 0, 0}, {1, 1, 1}), ParameterVector{8.1, 10, 1},
                                 1e-6);
}

// With theta = 0 the density is one and the process is Poisson with mean |W|.
TEST(MeanStatistics, PoissonCountsPassChiSquare) {
  const Window w = Window::box2(0, 4, 0, 2);
  ChainSettings cs;
  cs.burn_in = 2000;
  cs.steps_between = 200;
  cs.seed = 2;
  const auto s = mean_statistics(StraussModel(0.1), ParameterVector{0, 0}, 500, cs, w);
  // Bins: <=4, 5, ..., 12, >=13 for lambda = 8.
  const double lambda = w.volume();
  std::vector<int> lo_edges{0, 5, 6, 7, 8, 9, 10, 11, 12, 13};
  std::vector<double> observed(lo_edges.size(), 0.0), expected(lo_edges.size(), 0.0);
  for (const auto& row : s.rows) {
    const int n = static_cast<int>(row[0]);
    std::size_t b = 0;
    while (b + 1 < lo_edges.size() && n >= lo_edges[b + 1]) ++b;
    observed[b] += 1;
  }
  for (int n = 0; n < 200; ++n) {
    std::size_t b = 0;
    while (b + 1 < lo_edges.size() && n >= lo_edges[b + 1]) ++b;
    expected[b] += 500 * poisson_pmf(n, lambda);
  }
  double chi2 = 0.0;
  for (std::size_t b = 0; b < observed.size(); ++b) chi2 += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
  const double p = boost::math::gamma_q((observed.size() - 1) / 2.0, chi2 / 2.0);
  EXPECT_GT(p, 0.01) << "chi2 = " << chi2;
}

// When r exceeds the window diameter every pair interacts, s_r = n(n-1)/2 and
// P(n) is proportional to (beta |W|)^n gamma^(n(n-1)/2) / n!.
TEST(MeanStatistics, FullInteractionStraussMatchesExactCountLaw) {
  const double beta = 6.0, gamma = 0.7;
  ChainSettings cs;
  cs.burn_in = 5000;
  cs.steps_between = 50;
  cs.seed = 4;
  const auto s = mean_statistics(StraussModel(10.0), ParameterVector{std::log(beta), std::log(gamma)}, 20000, cs, kSquare);
  constexpr int kMax = 40;
  std::vector<double> exact(kMax, 0.0), empirical(kMax, 0.0);
  double z = 0.0;
  for (int n = 0; n < kMax; ++n) {
    exact[n] = std::exp(n * std::log(beta) + n * (n - 1) / 2.0 * std::log(gamma) - std::lgamma(n + 1.0));
    z += exact[n];
  }
  for (auto& e : exact) e /= z;
  for (const auto& row : s.rows) {
    ASSERT_EQ(row[1], row[0] * (row[0] - 1) / 2);
    empirical[static_cast<int>(row[0])] += 1.0 / static_cast<double>(s.rows.size());
  }
  EXPECT_LE(tv_distance(exact, empirical), 0.05);
}

TEST(MeanStatistics, SettingsContract) {
  ChainSettings cs;
  EXPECT_THROW(mean_statistics(StraussModel(0.1), ParameterVector{0, 0}, 0, cs, kSquare), ContractViolation);
  cs.mix = MoveMix{0.5, 0.5, 0.5};
  EXPECT_THROW(mean_statistics(StraussModel(0.1), ParameterVector{0, 0}, 10, cs, kSquare), ContractViolation);
}

TEST(MhAuxiliary, AdvancesPersistentChain) {
  const StraussModel m(0.1);
  MhAuxiliary<StraussModel> aux(m, kSquare, 100, 8);
  const ParameterVector theta{std::log(50.0), 0.0};
  ChainState<StraussModel> twin(m, kSquare, {}, 8);
  for (int i = 0; i < 5; ++i) {
    const auto t = aux.refresh(theta);
    twin.run(theta, MoveMix{}, 100);
    EXPECT_EQ(t, twin.statistics());
  }
}
