#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ssa/analysis.hpp"
#include "ssa/shadow.hpp"

using namespace ssa;

namespace {

// t(x) ~ N(theta, I): an exponential family whose likelihood maximiser is t_obs.
struct GaussianStub {
  std::mt19937_64 gen;
  std::normal_distribution<double> z{0.0, 1.0};

  explicit GaussianStub(std::uint64_t seed) : gen(seed) {}

  SufficientStatistics refresh(const ParameterVector& theta) {
    SufficientStatistics t(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) t[i] = theta[i] + z(gen);
    return t;
  }
};

ShadowConfig stub_config(long long n_outer, long long keep_every = 1) {
  ShadowConfig c;
  c.delta0 = {0.1, 0.1};
  c.m = 20;
  c.aux_steps = 1;
  c.n_outer = n_outer;
  c.keep_every = keep_every;
  c.seed = 12;
  return c;
}

}  // namespace

TEST(ShadowAcceptance, FavourableMoveAcceptedWithCertainty) {
  const PriorBox prior({-10, -10}, {10, 10});
  EXPECT_EQ(shadow_acceptance(ParameterVector{0, 0}, ParameterVector{0.1, 0}, SufficientStatistics{5, 0},
                              SufficientStatistics{3, 0}, prior, 1.0),
            1.0);
}

TEST(ShadowAcceptance, HandValue) {
  // (psi - theta) . (t_obs - t_aux) = 0.01 * (45.3 - 50) = -0.047
  const PriorBox prior({0, -7}, {7, 0});
  const double a = shadow_acceptance(ParameterVector{4.6, -0.69}, ParameterVector{4.61, -0.69},
                                     SufficientStatistics{45.3, 17.99}, SufficientStatistics{50.0, 17.99}, prior, 1.0);
  EXPECT_NEAR(a, std::exp(-0.047), 1e-12);
  EXPECT_NEAR(a, 0.9541, 1e-4);
}

TEST(ShadowAcceptance, TemperatureSoftensExponent) {
  const PriorBox prior({0, -7}, {7, 0});
  const ParameterVector th{4.6, -0.69}, psi{4.61, -0.69};
  const SufficientStatistics obs{45.3, 17.99}, aux{50.0, 17.99};
  EXPECT_NEAR(shadow_acceptance(th, psi, obs, aux, prior, 10.0), std::exp(-0.0047), 1e-12);
  EXPECT_NEAR(shadow_acceptance(th, psi, obs, aux, prior, 1e12), 1.0, 1e-12);
}

TEST(ShadowAcceptance, OutsidePriorIsZero) {
  const PriorBox prior({0, -7}, {7, 0});
  EXPECT_EQ(shadow_acceptance(ParameterVector{6.999, -1}, ParameterVector{7.001, -1}, SufficientStatistics{5, 0},
                              SufficientStatistics{0, 0}, prior, 1.0),
            0.0);
}

TEST(ShadowAcceptance, NonPositiveTemperatureIsContractViolation) {
  const PriorBox prior({0}, {1});
  EXPECT_THROW(shadow_acceptance(ParameterVector{0.5}, ParameterVector{0.5}, SufficientStatistics{1}, SufficientStatistics{1},
                                 prior, 0.0),
               ContractViolation);
}

TEST(ShadowAcceptance, InvariantUnderJointShift) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int rep = 0; rep < 200; ++rep) {
    const ParameterVector th{u(gen), u(gen)}, psi{u(gen), u(gen)}, c{3 * u(gen), 3 * u(gen)};
    const SufficientStatistics obs{10 * u(gen), 10 * u(gen)}, aux{10 * u(gen), 10 * u(gen)};
    const PriorBox prior({-2, -2}, {2, 2});
    const PriorBox shifted({-2 + c[0], -2 + c[1]}, {2 + c[0], 2 + c[1]});
    EXPECT_NEAR(shadow_acceptance(th, psi, obs, aux, prior, 0.7), shadow_acceptance(th + c, psi + c, obs, aux, shifted, 0.7),
                1e-12);
  }
}

TEST(ShadowInnerUpdate, ProposalsStayInUniformBox) {
  const PriorBox prior({-100, -100}, {100, 100});
  Rng rng(3);
  const ParameterVector th{1, 2};
  const std::vector<double> delta{0.2, 0.04};
  for (int rep = 0; rep < 2000; ++rep) {
    // With identical statistics every in-prior proposal is accepted.
    const auto s = shadow_inner_update(th, SufficientStatistics{0, 0}, SufficientStatistics{0, 0}, delta, 1.0, prior, rng);
    ASSERT_TRUE(s.accepted);
    ASSERT_LE(std::abs(s.theta[0] - 1), 0.1);
    ASSERT_LE(std::abs(s.theta[1] - 2), 0.02);
  }
}

TEST(ShadowInnerUpdate, NonPositiveDeltaIsContractViolation) {
  Rng rng(1);
  EXPECT_THROW(shadow_inner_update(ParameterVector{0}, SufficientStatistics{0}, SufficientStatistics{0}, {0.0}, 1.0,
                                   PriorBox({-1}, {1}), rng),
               ContractViolation);
}

TEST(Schedule, GeometricAndDeltaDecayMonotone) {
  GaussianStub stub(1);
  auto c = stub_config(500);
  Schedule s;
  s.T0 = 100;
  s.k_T = 0.99;
  s.k_delta = 0.995;
  const auto tr = ssa_run(stub, SufficientStatistics{0, 0}, PriorBox({-5, -5}, {5, 5}), ParameterVector{1, 1}, c, s);
  ASSERT_EQ(tr.rows.size(), 500u);
  EXPECT_EQ(tr.rows[0].temperature, 100.0);
  for (std::size_t j = 1; j < tr.rows.size(); ++j) {
    EXPECT_LT(tr.rows[j].temperature, tr.rows[j - 1].temperature);
    EXPECT_LT(tr.rows[j].delta[0], tr.rows[j - 1].delta[0]);
  }
  EXPECT_NEAR(tr.rows[499].temperature, 100 * std::pow(0.99, 499), 1e-9);
  EXPECT_NEAR(tr.rows[499].delta[1], 0.1 * std::pow(0.995, 499), 1e-12);
}

TEST(Schedule, LogarithmicKeepsProductConstant) {
  GaussianStub stub(1);
  Schedule s;
  s.kind = ScheduleKind::logarithmic;
  s.K = 3.0;
  const auto tr = ssa_run(stub, SufficientStatistics{0, 0}, PriorBox({-5, -5}, {5, 5}), ParameterVector{1, 1}, stub_config(300), s);
  for (std::size_t j = 0; j < tr.rows.size(); ++j) EXPECT_NEAR(tr.rows[j].temperature * std::log(j + 2.0), 3.0, 1e-12);
}

TEST(Schedule, LogarithmicDefaultStartsAtT0) {
  Schedule s;
  s.kind = ScheduleKind::logarithmic;
  s.T0 = 250;
  EXPECT_NEAR(s.initial_temperature(), 250.0, 1e-9);
}

TEST(Schedule, InvalidRatesRejected) {
  Schedule s;
  s.k_T = 1.5;
  EXPECT_THROW(s.validate(), ContractViolation);
  s = Schedule{};
  s.T0 = 0;
  EXPECT_THROW(s.validate(), ContractViolation);
}

TEST(SsaRun, ConstantScheduleReducesToAbcShadowBitwise) {
  const auto c = stub_config(400, 3);
  const PriorBox prior({-5, -5}, {5, 5});
  GaussianStub a(9), b(9);
  const auto tr = ssa_run(a, SufficientStatistics{1, -1}, prior, ParameterVector{0, 0}, c, Schedule::constant(1.0));
  const auto abc = abc_shadow_run(b, SufficientStatistics{1, -1}, prior, ParameterVector{0, 0}, c);
  ASSERT_EQ(tr.rows.size(), abc.size());
  for (std::size_t i = 0; i < abc.size(); ++i) EXPECT_EQ(tr.rows[i].theta, abc[i]);
}

TEST(SsaRun, KeptStatesStayInPriorBox) {
  GaussianStub stub(4);
  auto c = stub_config(2000);
  c.delta0 = {1.0, 1.0};
  const PriorBox prior({0, 0}, {1, 0.5});
  const auto tr = ssa_run(stub, SufficientStatistics{10, -10}, prior, ParameterVector{0.5, 0.25}, c, Schedule::constant(1.0));
  for (const auto& r : tr.rows) EXPECT_TRUE(prior.contains(r.theta));
  EXPECT_TRUE(prior.contains(tr.theta_hat));
}

TEST(SsaRun, InitialOutsidePriorIsContractViolation) {
  GaussianStub stub(1);
  EXPECT_THROW(ssa_run(stub, SufficientStatistics{0, 0}, PriorBox({0, 0}, {1, 1}), ParameterVector{2, 0}, stub_config(10),
                       Schedule{}),
               ContractViolation);
}

TEST(SsaRun, RowsAreThinnedAndCountersAddUp) {
  GaussianStub stub(2);
  const auto tr = ssa_run(stub, SufficientStatistics{0, 0}, PriorBox({-5, -5}, {5, 5}), ParameterVector{0, 0},
                          stub_config(1000, 100), Schedule{});
  ASSERT_EQ(tr.rows.size(), 10u);
  EXPECT_EQ(tr.rows.back().iter, 1000);
  EXPECT_EQ(tr.proposed, 1000 * 20);
  EXPECT_GE(tr.acceptance_rate(), 0.0);
  EXPECT_LE(tr.acceptance_rate(), 1.0);
}

TEST(SsaRun, AnnealingConvergesToStubMaximiser) {
  GaussianStub stub(6);
  auto c = stub_config(20000, 100);
  c.delta0 = {0.5, 0.5};
  Schedule s;
  s.T0 = 10;
  s.k_T = 0.9995;
  s.k_delta = 0.9996;
  const SufficientStatistics t_obs{1.5, -2.0};
  const auto tr = ssa_run(stub, t_obs, PriorBox({-5, -5}, {5, 5}), ParameterVector{0, 0}, c, s);
  EXPECT_NEAR(tr.theta_hat[0], 1.5, 0.1);
  EXPECT_NEAR(tr.theta_hat[1], -2.0, 0.1);
}

TEST(AbcShadow, SamplesConcentrateAroundObservation) {
  GaussianStub stub(7);
  auto c = stub_config(20000, 10);
  c.delta0 = {0.3, 0.3};
  const auto samples = abc_shadow_run(stub, SufficientStatistics{2.0, 0.5}, PriorBox({-10, -10}, {10, 10}),
                                      ParameterVector{0, 0}, c);
  const auto mat = SampleMatrix::from_parameters(samples, {"a", "b"}).tail(200);
  const auto a = mat.column(0), b = mat.column(1);
  EXPECT_NEAR(mean(a), 2.0, 0.3);
  EXPECT_NEAR(mean(b), 0.5, 0.3);
}
