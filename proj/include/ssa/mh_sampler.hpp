#ifndef SSA_MH_SAMPLER_HPP
#define SSA_MH_SAMPLER_HPP

// Birth / death / move Metropolis-Hastings sampler for the Gibbs models.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ssa/core.hpp"
#include "ssa/models.hpp"
#include "ssa/random.hpp"

namespace ssa {

struct MoveMix {
  double p_birth = 1.0 / 3.0;
  double p_death = 1.0 / 3.0;
  double p_move = 1.0 / 3.0;

  void validate() const {
    require(p_birth >= 0.0 && p_death >= 0.0 && p_move >= 0.0, "move mix probabilities must be non-negative");
    require(std::abs(p_birth + p_death + p_move - 1.0) < 1e-9, "move mix probabilities must sum to one");
  }
};

enum class MoveType { birth, death, move };

struct StepResult {
  MoveType type = MoveType::birth;
  bool accepted = false;
  /// Metropolis-Hastings ratio before truncation at one (0 when auto-rejected).
  double ratio = 0.0;
};

/// One Markov chain over configurations: the pattern, its cached statistics,
/// the model's incremental bookkeeping and the chain's own random stream.
template <GibbsModel M>
class ChainState {
 public:
  using Item = typename M::Item;

  ChainState(const M& model, const Window& window, std::vector<Item> init, std::uint64_t seed)
      : model_(&model), window_(window), items_(std::move(init)), tracker_(model, window), rng_(seed) {
    require(window.dim() == model.space_dim(), "chain window dimension does not match the model");
    tracker_.reset(items_);
    stats_ = model.statistics(window_, items_);
  }

  const M& model() const { return *model_; }
  const Window& window() const { return window_; }
  const std::vector<Item>& items() const { return items_; }
  const SufficientStatistics& statistics() const { return stats_; }
  Rng& rng() { return rng_; }

  Pattern pattern() const { return Pattern(window_, items_); }

  StepResult step(const ParameterVector& theta, const MoveMix& mix) {
    require(theta.size() == model_->dimension(), "parameter dimension does not match the model");
    StepResult res;
    const double u = rng_.uniform();
    const double n = static_cast<double>(items_.size());
    const double vol = window_.volume();
    if (u < mix.p_birth) {
      res.type = MoveType::birth;
      const Item item = model_->random_item(rng_, window_);
      const StatDelta d = tracker_.change(items_, -1, &item);
      res.ratio = std::exp(dot(theta, d)) * vol * (mix.p_death / mix.p_birth) / (n + 1.0);
      if (rng_.uniform() < res.ratio) {
        tracker_.commit(items_, -1, &item);
        items_.push_back(item);
        apply(d);
        res.accepted = true;
      }
    } else if (u < mix.p_birth + mix.p_death) {
      res.type = MoveType::death;
      if (items_.empty()) return res;
      const int i = static_cast<int>(rng_.below(items_.size()));
      const StatDelta d = tracker_.change(items_, i, nullptr);
      res.ratio = std::exp(dot(theta, d)) * n * (mix.p_birth / mix.p_death) / vol;
      if (rng_.uniform() < res.ratio) {
        tracker_.commit(items_, i, nullptr);
        items_[i] = items_.back();
        items_.pop_back();
        apply(d);
        res.accepted = true;
      }
    } else {
      res.type = MoveType::move;
      if (items_.empty()) return res;
      const int i = static_cast<int>(rng_.below(items_.size()));
      const Item item = model_->random_item(rng_, window_);
      const StatDelta d = tracker_.change(items_, i, &item);
      res.ratio = std::exp(dot(theta, d));
      if (rng_.uniform() < res.ratio) {
        tracker_.commit(items_, i, &item);
        items_[i] = item;
        apply(d);
        res.accepted = true;
      }
    }
    return res;
  }

  void run(const ParameterVector& theta, const MoveMix& mix, long long steps) {
    for (long long s = 0; s < steps; ++s) step(theta, mix);
  }

 private:
  void apply(const StatDelta& d) {
    for (std::size_t i = 0; i < stats_.size(); ++i) stats_[i] += d[i];
  }

  const M* model_;
  Window window_;
  std::vector<Item> items_;
  typename M::Tracker tracker_;
  Rng rng_;
  SufficientStatistics stats_;
};

template <GibbsModel M>
StepResult mh_step(const ParameterVector& theta, ChainState<M>& state, const MoveMix& mix = {}) {
  return state.step(theta, mix);
}

namespace detail {
template <GibbsModel M>
std::vector<typename M::Item> initial_items(const M& model, const Pattern& init) {
  const auto s = items_of(model, init);
  return {s.begin(), s.end()};
}
}  // namespace detail

/// Approximate draw from p(.|theta) after n_steps MH steps started at `init`.
template <GibbsModel M>
Pattern sample_pattern(const M& model, const ParameterVector& theta, long long n_steps, const Pattern& init,
                       std::uint64_t seed, const MoveMix& mix = {}) {
  require(n_steps >= 0, "sample_pattern: n_steps must be non-negative");
  ChainState<M> chain(model, init.window, detail::initial_items(model, init), seed);
  chain.run(theta, mix, n_steps);
  return chain.pattern();
}

struct ChainSettings {
  long long burn_in = 0;
  long long steps_between = 0;
  std::uint64_t seed = 1;
  MoveMix mix{};
};

struct StatisticsSample {
  SufficientStatistics mean;
  SufficientStatistics sd;
  std::vector<std::vector<double>> rows;  // one row of statistics per thinned sample
  Pattern final_pattern;
};

/// Thinned chain at fixed theta: sample k is taken after burn_in + k * steps_between steps.
template <GibbsModel M>
StatisticsSample mean_statistics(const M& model, const ParameterVector& theta, long long n_samples,
                                 const ChainSettings& settings, const Pattern& init) {
  require(n_samples >= 1, "mean_statistics: need at least one sample");
  settings.mix.validate();
  ChainState<M> chain(model, init.window, detail::initial_items(model, init), settings.seed);
  chain.run(theta, settings.mix, settings.burn_in);
  const std::size_t k = model.dimension();
  StatisticsSample out;
  out.rows.reserve(static_cast<std::size_t>(n_samples));
  for (long long s = 0; s < n_samples; ++s) {
    if (s > 0) chain.run(theta, settings.mix, settings.steps_between);
    out.rows.push_back(chain.statistics().values());
  }
  out.mean = SufficientStatistics(k);
  out.sd = SufficientStatistics(k);
  for (const auto& row : out.rows)
    for (std::size_t i = 0; i < k; ++i) out.mean[i] += row[i];
  for (std::size_t i = 0; i < k; ++i) out.mean[i] /= static_cast<double>(n_samples);
  if (n_samples > 1) {
    for (const auto& row : out.rows)
      for (std::size_t i = 0; i < k; ++i) out.sd[i] += (row[i] - out.mean[i]) * (row[i] - out.mean[i]);
    for (std::size_t i = 0; i < k; ++i) out.sd[i] = std::sqrt(out.sd[i] / static_cast<double>(n_samples - 1));
  }
  out.final_pattern = chain.pattern();
  return out;
}

template <GibbsModel M>
StatisticsSample mean_statistics(const M& model, const ParameterVector& theta, long long n_samples,
                                 const ChainSettings& settings, const Window& window) {
  if constexpr (std::is_same_v<typename M::Item, Point>)
    return mean_statistics(model, theta, n_samples, settings, Pattern(window, std::vector<Point>{}));
  else
    return mean_statistics(model, theta, n_samples, settings, Pattern(window, std::vector<Segment>{}));
}

/// Auxiliary-variable simulator for the shadow chains: a persistent MH chain
/// that is advanced `steps` moves at the current parameter on every refresh.
template <GibbsModel M>
class MhAuxiliary {
 public:
  MhAuxiliary(const M& model, const Window& window, long long steps, std::uint64_t seed, MoveMix mix = {},
              std::vector<typename M::Item> init = {})
      : chain_(model, window, std::move(init), seed), steps_(steps), mix_(mix) {
    require(steps >= 1, "auxiliary refresh needs at least one MH step");
    mix_.validate();
  }

  SufficientStatistics refresh(const ParameterVector& theta) {
    chain_.run(theta, mix_, steps_);
    return chain_.statistics();
  }

  const ChainState<M>& chain() const { return chain_; }

 private:
  ChainState<M> chain_;
  long long steps_;
  MoveMix mix_;
};

}  // namespace ssa

#endif  // SSA_MH_SAMPLER_HPP
