#ifndef SSA_SHADOW_HPP
#define SSA_SHADOW_HPP

// ABC Shadow posterior sampling and Shadow Simulated Annealing.
//
// Both drivers run the same outer loop: refresh the auxiliary configuration x
// at the current parameter, then perform m uniform-box updates of theta that
// accept with
//
//     min{1, exp[(psi - theta) . (t(y) - t(x)) / T]}
//
// (zero outside the prior box). The annealing driver additionally shrinks the
// temperature T and the proposal widths delta after every outer iteration.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "ssa/core.hpp"
#include "ssa/mh_sampler.hpp"
#include "ssa/random.hpp"

namespace ssa {

/// Anything that can produce t(x) for x ~ p(.|theta), possibly approximately.
template <class S>
concept AuxiliarySampler = requires(S s, const ParameterVector& theta) {
  { s.refresh(theta) } -> std::convertible_to<SufficientStatistics>;
};

struct ShadowConfig {
  std::vector<double> delta0;  // full proposal widths; psi_i is uniform on theta_i +- delta_i / 2
  long long m = 200;
  long long aux_steps = 100;
  long long n_outer = 1000;
  long long keep_every = 1;
  std::uint64_t seed = 1;
  MoveMix mix{};

  void validate(std::size_t dim) const {
    require(delta0.size() == dim, "delta0 length must equal the statistic dimension");
    for (double d : delta0) require(d > 0.0, "delta0 entries must be positive");
    require(m >= 1, "m must be at least 1");
    require(aux_steps >= 1, "aux_steps must be at least 1");
    require(n_outer >= 1, "n_outer must be at least 1");
    require(keep_every >= 1, "keep_every must be at least 1");
    mix.validate();
  }

  std::uint64_t proposal_seed() const { return derive_seed(seed, 1); }
  std::uint64_t auxiliary_seed() const { return derive_seed(seed, 2); }
};

enum class ScheduleKind { geometric, logarithmic, constant };

inline std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::geometric: return "geometric";
    case ScheduleKind::logarithmic: return "logarithmic";
    case ScheduleKind::constant: return "constant";
  }
  return "?";
}

/// Temperature and proposal-width decay. Temperatures by outer index j = 0, 1, ...:
///   geometric    T_0 = T0, T_j = k_T * T_{j-1}
///   logarithmic  T_j = K / log(j + 2)
///   constant     T_j = T0
/// Proposal widths always follow delta_j = k_delta * delta_{j-1}.
struct Schedule {
  ScheduleKind kind = ScheduleKind::geometric;
  double T0 = 1e4;
  double k_T = 0.9999;
  double k_delta = 0.99999;
  double K = 0.0;  // logarithmic constant; <= 0 means T0 * log 2, so that T_0 = T0

  static Schedule constant(double T = 1.0) { return {ScheduleKind::constant, T, 1.0, 1.0, 0.0}; }

  void validate() const {
    require(T0 > 0.0, "schedule: T0 must be positive");
    require(k_T > 0.0 && k_T <= 1.0, "schedule: k_T must lie in (0, 1]");
    require(k_delta > 0.0 && k_delta <= 1.0, "schedule: k_delta must lie in (0, 1]");
  }

  double log_constant() const { return K > 0.0 ? K : T0 * std::log(2.0); }

  double initial_temperature() const {
    return kind == ScheduleKind::logarithmic ? log_constant() / std::log(2.0) : T0;
  }

  /// Temperature for outer index j + 1 given the one used at index j.
  double next_temperature(double T, long long j) const {
    switch (kind) {
      case ScheduleKind::geometric: return k_T * T;
      case ScheduleKind::logarithmic: return log_constant() / std::log(static_cast<double>(j + 1) + 2.0);
      case ScheduleKind::constant: return T;
    }
    return T;
  }
};

/// Shadow acceptance probability at temperature T; zero outside the prior box.
inline double shadow_acceptance(const ParameterVector& theta, const ParameterVector& proposal,
                                const SufficientStatistics& t_obs, const SufficientStatistics& t_aux,
                                const PriorBox& prior, double T) {
  require(T > 0.0, "shadow_acceptance: temperature must be positive");
  require(theta.size() == proposal.size() && theta.size() == t_obs.size() && t_obs.size() == t_aux.size(),
          "shadow_acceptance: dimension mismatch");
  if (!prior.contains(proposal)) return 0.0;
  double e = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) e += (proposal[i] - theta[i]) * (t_obs[i] - t_aux[i]);
  e /= T;
  return e >= 0.0 ? 1.0 : std::exp(e);
}

struct InnerStep {
  ParameterVector theta;
  bool accepted = false;
};

namespace detail {

// In-place update; `scratch` receives the proposal.
inline bool inner_update(ParameterVector& theta, ParameterVector& scratch, const SufficientStatistics& t_obs,
                         const SufficientStatistics& t_aux, const std::vector<double>& delta, double T,
                         const PriorBox& prior, Rng& rng) {
  for (std::size_t i = 0; i < theta.size(); ++i) scratch[i] = theta[i] + delta[i] * (rng.uniform() - 0.5);
  const double a = shadow_acceptance(theta, scratch, t_obs, t_aux, prior, T);
  if (a <= 0.0) return false;
  if (a >= 1.0 || rng.uniform() < a) {
    std::swap(theta, scratch);
    return true;
  }
  return false;
}

}  // namespace detail

/// One uniform-box proposal psi ~ U(theta +- delta/2) accepted with shadow_acceptance.
inline InnerStep shadow_inner_update(const ParameterVector& theta, const SufficientStatistics& t_obs,
                                     const SufficientStatistics& t_aux, const std::vector<double>& delta, double T,
                                     const PriorBox& prior, Rng& rng) {
  require(delta.size() == theta.size(), "shadow_inner_update: delta dimension mismatch");
  for (double d : delta) require(d > 0.0, "shadow_inner_update: delta must be positive");
  InnerStep out{theta, false};
  ParameterVector scratch(theta.size());
  out.accepted = detail::inner_update(out.theta, scratch, t_obs, t_aux, delta, T, prior, rng);
  return out;
}

struct TrajectoryRow {
  long long iter = 0;  // 1-based outer iteration after which theta was recorded
  double temperature = 1.0;
  std::vector<double> delta;
  ParameterVector theta;
  double accept_rate = 0.0;  // inner acceptance rate since the previous kept row
};

struct SsaTrajectory {
  std::vector<TrajectoryRow> rows;
  ParameterVector theta_hat;
  long long proposed = 0;
  long long accepted = 0;

  double acceptance_rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

/// Shadow Simulated Annealing with an arbitrary auxiliary simulator.
template <AuxiliarySampler S>
SsaTrajectory ssa_run(S& sampler, const SufficientStatistics& t_obs, const PriorBox& prior, const ParameterVector& theta0,
                      const ShadowConfig& config, const Schedule& schedule) {
  const std::size_t k = t_obs.size();
  config.validate(k);
  schedule.validate();
  require(theta0.size() == k && prior.size() == k, "ssa_run: dimension mismatch");
  require(prior.contains(theta0), "ssa_run: initial parameter outside the prior box");

  Rng rng(config.proposal_seed());
  SsaTrajectory out;
  out.rows.reserve(static_cast<std::size_t>(config.n_outer / config.keep_every));
  ParameterVector theta = theta0;
  ParameterVector scratch(k);
  std::vector<double> delta = config.delta0;
  double T = schedule.initial_temperature();
  long long block_proposed = 0, block_accepted = 0;

  for (long long j = 0; j < config.n_outer; ++j) {
    const SufficientStatistics t_aux = sampler.refresh(theta);
    for (long long s = 0; s < config.m; ++s) {
      if (detail::inner_update(theta, scratch, t_obs, t_aux, delta, T, prior, rng)) ++block_accepted;
    }
    block_proposed += config.m;
    if ((j + 1) % config.keep_every == 0) {
      out.rows.push_back({j + 1, T, delta, theta, static_cast<double>(block_accepted) / block_proposed});
      out.proposed += block_proposed;
      out.accepted += block_accepted;
      block_proposed = block_accepted = 0;
    }
    T = schedule.next_temperature(T, j);
    for (double& d : delta) d *= schedule.k_delta;
  }
  out.proposed += block_proposed;
  out.accepted += block_accepted;
  out.theta_hat = theta;
  return out;
}

/// ABC Shadow: fixed delta, T = 1. Returns every keep_every-th outer state.
template <AuxiliarySampler S>
std::vector<ParameterVector> abc_shadow_run(S& sampler, const SufficientStatistics& t_obs, const PriorBox& prior,
                                            const ParameterVector& theta0, const ShadowConfig& config) {
  const std::size_t k = t_obs.size();
  config.validate(k);
  require(theta0.size() == k && prior.size() == k, "abc_shadow_run: dimension mismatch");
  require(prior.contains(theta0), "abc_shadow_run: initial parameter outside the prior box");

  Rng rng(config.proposal_seed());
  std::vector<ParameterVector> samples;
  samples.reserve(static_cast<std::size_t>(config.n_outer / config.keep_every));
  ParameterVector theta = theta0;
  ParameterVector scratch(k);
  for (long long j = 1; j <= config.n_outer; ++j) {
    const SufficientStatistics t_aux = sampler.refresh(theta);
    for (long long s = 0; s < config.m; ++s) detail::inner_update(theta, scratch, t_obs, t_aux, config.delta0, 1.0, prior, rng);
    if (j % config.keep_every == 0) samples.push_back(theta);
  }
  return samples;
}

/// Model-driven overloads: the auxiliary pattern is a persistent MH chain
/// warm-started from `aux_init` and advanced aux_steps moves per outer iteration.
template <GibbsModel M>
SsaTrajectory ssa_run(const M& model, const Window& window, const SufficientStatistics& t_obs, const PriorBox& prior,
                      const ParameterVector& theta0, const ShadowConfig& config, const Schedule& schedule,
                      std::vector<typename M::Item> aux_init = {}) {
  MhAuxiliary<M> aux(model, window, config.aux_steps, config.auxiliary_seed(), config.mix, std::move(aux_init));
  return ssa_run(aux, t_obs, prior, theta0, config, schedule);
}

template <GibbsModel M>
std::vector<ParameterVector> abc_shadow_run(const M& model, const Window& window, const SufficientStatistics& t_obs,
                                            const PriorBox& prior, const ParameterVector& theta0,
                                            const ShadowConfig& config, std::vector<typename M::Item> aux_init = {}) {
  MhAuxiliary<M> aux(model, window, config.aux_steps, config.auxiliary_seed(), config.mix, std::move(aux_init));
  return abc_shadow_run(aux, t_obs, prior, theta0, config);
}

}  // namespace ssa

#endif  // SSA_SHADOW_HPP
