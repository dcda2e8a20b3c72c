#ifndef SSA_MODELS_HPP
#define SSA_MODELS_HPP

// The four exponential-family Gibbs models. Each model maps a configuration to
// its sufficient statistics and owns a Tracker that maintains whatever spatial
// bookkeeping is needed to price a single birth, death or move without a full
// recomputation.
//
// Tracker protocol, shared by all models:
//   change(items, removed, added)  statistic change if item `removed` (or -1)
//                                  is taken out and `added` (or nullptr) is put in
//   commit(items, removed, added)  apply that change to the bookkeeping; called
//                                  before the caller edits `items`. A death
//                                  swap-removes (last item moves to `removed`),
//                                  a birth appends, a move replaces in place.

#include <array>
#include <cmath>
#include <concepts>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ssa/core.hpp"
#include "ssa/geometry.hpp"
#include "ssa/random.hpp"

namespace ssa {

inline constexpr std::size_t kMaxStatistics = 4;
using StatDelta = std::array<double, kMaxStatistics>;

inline double dot(const ParameterVector& theta, const StatDelta& d) {
  double s = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) s += theta[i] * d[i];
  return s;
}

template <class M>
concept GibbsModel = requires(const M& m, const Window& w, Rng& rng, std::span<const typename M::Item> items) {
  typename M::Item;
  typename M::Tracker;
  { m.dimension() } -> std::convertible_to<std::size_t>;
  { m.statistic_names() } -> std::convertible_to<std::vector<std::string>>;
  { m.statistics(w, items) } -> std::same_as<SufficientStatistics>;
  { m.random_item(rng, w) } -> std::same_as<typename M::Item>;
  { m.item_kind() } -> std::same_as<ItemKind>;
  { m.space_dim() } -> std::convertible_to<int>;
};

namespace detail {

inline Point uniform_point(Rng& rng, const Window& w) {
  Point p;
  p.x = rng.uniform(w.lower().x, w.upper().x);
  p.y = rng.uniform(w.lower().y, w.upper().y);
  if (w.dim() == 3) p.z = rng.uniform(w.lower().z, w.upper().z);
  return p;
}

// Default quadrature resolution: r/100 in the plane, r/40 in space.
inline double default_resolution(double r, int dim) { return dim == 2 ? r / 100.0 : r / 40.0; }

}  // namespace detail

// ---------------------------------------------------------------------------

/// Strauss process: t(y) = (n(y), s_r(y)), theta = (log beta, log gamma).
class StraussModel {
 public:
  using Item = Point;

  explicit StraussModel(double r) : r_(r) { require(r > 0.0, "strauss: radius must be positive"); }

  double radius() const { return r_; }
  std::size_t dimension() const { return 2; }
  ItemKind item_kind() const { return ItemKind::points; }
  int space_dim() const { return 2; }
  std::vector<std::string> statistic_names() const { return {"n", "s_r"}; }

  SufficientStatistics statistics(const Window&, std::span<const Point> items) const {
    return SufficientStatistics{static_cast<double>(items.size()), static_cast<double>(pair_count(items, r_))};
  }

  Point random_item(Rng& rng, const Window& w) const { return detail::uniform_point(rng, w); }

  class Tracker {
   public:
    Tracker(const StraussModel& m, const Window& w) : r_(m.r_), grid_(w, m.r_) {}

    void reset(std::span<const Point> items) {
      grid_.clear();
      for (int i = 0; i < static_cast<int>(items.size()); ++i) grid_.insert(i, items[i]);
    }

    StatDelta change(std::span<const Point> items, int removed, const Point* added) const {
      StatDelta d{};
      if (removed >= 0) {
        d[0] -= 1.0;
        d[1] -= close_neighbours(items, items[removed], removed);
      }
      if (added) {
        d[0] += 1.0;
        d[1] += close_neighbours(items, *added, removed);
      }
      return d;
    }

    void commit(std::span<const Point> items, int removed, const Point* added) {
      const int n = static_cast<int>(items.size());
      if (removed >= 0) {
        grid_.erase(removed, items[removed]);
        if (added) {
          grid_.insert(removed, *added);
        } else if (removed != n - 1) {
          grid_.relabel(n - 1, removed, items[n - 1]);
        }
      } else if (added) {
        grid_.insert(n, *added);
      }
    }

   private:
    double close_neighbours(std::span<const Point> items, const Point& p, int skip) const {
      const double r2 = r_ * r_;
      int c = 0;
      grid_.for_each_near(p, [&](int j) {
        if (j != skip && squared_distance(items[j], p) < r2) ++c;
      });
      return c;
    }

    double r_;
    SpatialGrid grid_;
  };

 private:
  double r_;
};

// ---------------------------------------------------------------------------

/// Planar area-interaction process: t(y) = (n(y), a_r(y)) with
/// a_r(y) = -nu[union b(y_i, r)] / (pi r^2).
class AreaInteractionModel {
 public:
  using Item = Point;

  explicit AreaInteractionModel(double r, double resolution = 0.0, bool clip_to_window = false)
      : r_(r), resolution_(resolution > 0.0 ? resolution : detail::default_resolution(r, 2)), clip_(clip_to_window) {
    require(r > 0.0, "area-interaction: radius must be positive");
  }

  double radius() const { return r_; }
  double resolution() const { return resolution_; }
  bool clip_to_window() const { return clip_; }
  std::size_t dimension() const { return 2; }
  ItemKind item_kind() const { return ItemKind::points; }
  int space_dim() const { return 2; }
  std::vector<std::string> statistic_names() const { return {"n", "a_r"}; }

  double area_scale() const { return 1.0 / (std::numbers::pi * r_ * r_); }

  SufficientStatistics statistics(const Window& w, std::span<const Point> items) const {
    CoverageGrid cov(w, r_, resolution_, clip_);
    for (const auto& p : items) cov.add(p);
    return SufficientStatistics{static_cast<double>(items.size()), -cov.covered_measure() * area_scale()};
  }

  Point random_item(Rng& rng, const Window& w) const { return detail::uniform_point(rng, w); }

  class Tracker {
   public:
    Tracker(const AreaInteractionModel& m, const Window& w)
        : model_(&m), window_(w), scale_(-m.area_scale()), cov_(w, m.r_, m.resolution_, m.clip_) {}

    void reset(std::span<const Point> items) {
      cov_ = CoverageGrid(window_, model_->r_, model_->resolution_, model_->clip_);
      for (const auto& p : items) cov_.add(p);
    }

    StatDelta change(std::span<const Point> items, int removed, const Point* added) const {
      StatDelta d{};
      long long cells = 0;
      if (removed >= 0 && added) {
        cells = cov_.move_change(items[removed], *added);
      } else if (removed >= 0) {
        d[0] = -1.0;
        cells = -cov_.death_loss(items[removed]);
      } else if (added) {
        d[0] = 1.0;
        cells = cov_.birth_gain(*added);
      }
      d[1] = scale_ * static_cast<double>(cells) * cov_.cell_volume();
      return d;
    }

    void commit(std::span<const Point> items, int removed, const Point* added) {
      if (removed >= 0) cov_.remove(items[removed]);
      if (added) cov_.add(*added);
    }

   private:
    const AreaInteractionModel* model_;
    Window window_;
    double scale_;
    CoverageGrid cov_;
  };

 private:
  double r_;
  double resolution_;
  bool clip_;
};

// ---------------------------------------------------------------------------

/// Candy model of connected segments: t(y) = (n_d, n_s, n_f, n_r).
class CandyModel {
 public:
  using Item = Segment;

  explicit CandyModel(CandyParams params) : p_(params) { p_.validate(); }

  const CandyParams& params() const { return p_; }
  std::size_t dimension() const { return 4; }
  ItemKind item_kind() const { return ItemKind::segments; }
  int space_dim() const { return 2; }
  std::vector<std::string> statistic_names() const { return {"n_d", "n_s", "n_f", "n_r"}; }

  SufficientStatistics statistics(const Window&, std::span<const Segment> items) const {
    const auto c = candy_counts(items, p_);
    return SufficientStatistics{static_cast<double>(c.doubly), static_cast<double>(c.singly),
                                static_cast<double>(c.free), static_cast<double>(c.rejected)};
  }

  Segment random_item(Rng& rng, const Window& w) const {
    const Point c = detail::uniform_point(rng, w);
    return Segment(c, rng.uniform(0.0, std::numbers::pi), p_.length);
  }

  class Tracker {
   public:
    Tracker(const CandyModel& m, const Window& w) : p_(m.p_), grid_(w, m.p_.interaction_range()) {}

    void reset(std::span<const Segment> items) {
      grid_.clear();
      conn_.assign(items.size(), {0, 0});
      for (int i = 0; i < static_cast<int>(items.size()); ++i) {
        grid_.for_each_near(items[i].center(), [&](int j) {
          if (auto link = candy_connection(items[i], items[j], p_)) {
            ++conn_[i][link->first];
            ++conn_[j][link->second];
          }
        });
        grid_.insert(i, items[i].center());
      }
    }

    StatDelta change(std::span<const Segment> items, int removed, const Segment* added) const {
      const Plan plan = make_plan(items, removed, added);
      StatDelta d{};
      auto bump = [&](CandyClass c, double by) { d[2 - static_cast<int>(c)] += by; };
      if (removed >= 0) bump(candy_class(conn_[removed][0], conn_[removed][1]), -1.0);
      if (added) bump(candy_class(plan.added_conn[0], plan.added_conn[1]), 1.0);
      for (const auto& adj : plan.adjust) {
        const auto& c = conn_[adj.index];
        bump(candy_class(c[0], c[1]), -1.0);
        bump(candy_class(c[0] + adj.change[0], c[1] + adj.change[1]), 1.0);
      }
      d[3] = plan.rejected_change;
      return d;
    }

    void commit(std::span<const Segment> items, int removed, const Segment* added) {
      const Plan plan = make_plan(items, removed, added);
      for (const auto& adj : plan.adjust) {
        conn_[adj.index][0] += adj.change[0];
        conn_[adj.index][1] += adj.change[1];
      }
      const int n = static_cast<int>(items.size());
      if (removed >= 0) {
        grid_.erase(removed, items[removed].center());
        if (added) {
          grid_.insert(removed, added->center());
          conn_[removed] = plan.added_conn;
        } else {
          if (removed != n - 1) grid_.relabel(n - 1, removed, items[n - 1].center());
          conn_[removed] = conn_[n - 1];
          conn_.pop_back();
        }
      } else if (added) {
        grid_.insert(n, added->center());
        conn_.push_back(plan.added_conn);
      }
    }

   private:
    struct Adjustment {
      int index;
      std::array<int, 2> change;
    };
    struct Plan {
      std::vector<Adjustment> adjust;
      std::array<int, 2> added_conn{0, 0};
      double rejected_change = 0.0;
    };

    Plan make_plan(std::span<const Segment> items, int removed, const Segment* added) const {
      Plan plan;
      auto adjust = [&](int j, int end, int by) {
        for (auto& a : plan.adjust)
          if (a.index == j) {
            a.change[end] += by;
            return;
          }
        Adjustment a{j, {0, 0}};
        a.change[end] = by;
        plan.adjust.push_back(a);
      };
      if (removed >= 0) {
        const Segment& s = items[removed];
        grid_.for_each_near(s.center(), [&](int j) {
          if (j == removed) return;
          if (auto link = candy_connection(s, items[j], p_)) adjust(j, link->second, -1);
          if (candy_repulsive(s, items[j], p_)) plan.rejected_change -= 1.0;
        });
      }
      if (added) {
        grid_.for_each_near(added->center(), [&](int j) {
          if (j == removed) return;
          if (auto link = candy_connection(*added, items[j], p_)) {
            ++plan.added_conn[link->first];
            adjust(j, link->second, +1);
          }
          if (candy_repulsive(*added, items[j], p_)) plan.rejected_change += 1.0;
        });
      }
      return plan;
    }

    CandyParams p_;
    SpatialGrid grid_;
    std::vector<std::array<int, 2>> conn_;
  };

 private:
  CandyParams p_;
};

// ---------------------------------------------------------------------------

/// Inhomogeneous area-interaction model for galaxies around filament spines, in 3-D.
/// Stored statistics: (n(y), d_F(y), -a_r(y)) with d_F = -sum_i d(y_i, F) and
/// a_r = 3 A(y) / (4 pi r^3); theta = (log beta_1, log beta_2, log gamma).
class GalaxyModel {
 public:
  using Item = Point;

  GalaxyModel(double r, SpineSet spines, double resolution = 0.0, bool clip_to_window = false)
      : r_(r),
        spines_(std::move(spines)),
        resolution_(resolution > 0.0 ? resolution : detail::default_resolution(r, 3)),
        clip_(clip_to_window) {
    require(r > 0.0, "galaxy: radius must be positive");
    spines_.validate();
  }

  double radius() const { return r_; }
  double resolution() const { return resolution_; }
  bool clip_to_window() const { return clip_; }
  const SpineSet& spines() const { return spines_; }
  std::size_t dimension() const { return 3; }
  ItemKind item_kind() const { return ItemKind::points; }
  int space_dim() const { return 3; }
  std::vector<std::string> statistic_names() const { return {"n", "d_F", "neg_a_r"}; }

  double volume_scale() const { return 3.0 / (4.0 * std::numbers::pi * r_ * r_ * r_); }

  SufficientStatistics statistics(const Window& w, std::span<const Point> items) const {
    CoverageGrid cov(w, r_, resolution_, clip_);
    double dist = 0.0;
    for (const auto& p : items) {
      cov.add(p);
      dist += polyline_distance(p, spines_);
    }
    return SufficientStatistics{static_cast<double>(items.size()), -dist, -cov.covered_measure() * volume_scale()};
  }

  /// Statistics in the reporting sign convention: (n, d_F, a_r) with a_r >= 0.
  static SufficientStatistics reported(const SufficientStatistics& t) {
    return SufficientStatistics{t[0], t[1], -t[2]};
  }

  Point random_item(Rng& rng, const Window& w) const { return detail::uniform_point(rng, w); }

  class Tracker {
   public:
    Tracker(const GalaxyModel& m, const Window& w)
        : model_(&m), window_(w), scale_(-m.volume_scale()), cov_(w, m.r_, m.resolution_, m.clip_) {}

    void reset(std::span<const Point> items) {
      cov_ = CoverageGrid(window_, model_->r_, model_->resolution_, model_->clip_);
      for (const auto& p : items) cov_.add(p);
    }

    StatDelta change(std::span<const Point> items, int removed, const Point* added) const {
      StatDelta d{};
      long long cells = 0;
      if (removed >= 0) {
        d[0] -= 1.0;
        d[1] += polyline_distance(items[removed], model_->spines_);
      }
      if (added) {
        d[0] += 1.0;
        d[1] -= polyline_distance(*added, model_->spines_);
      }
      if (removed >= 0 && added)
        cells = cov_.move_change(items[removed], *added);
      else if (removed >= 0)
        cells = -cov_.death_loss(items[removed]);
      else if (added)
        cells = cov_.birth_gain(*added);
      d[2] = scale_ * static_cast<double>(cells) * cov_.cell_volume();
      return d;
    }

    void commit(std::span<const Point> items, int removed, const Point* added) {
      if (removed >= 0) cov_.remove(items[removed]);
      if (added) cov_.add(*added);
    }

   private:
    const GalaxyModel* model_;
    Window window_;
    double scale_;
    CoverageGrid cov_;
  };

 private:
  double r_;
  SpineSet spines_;
  double resolution_;
  bool clip_;
};

// ---------------------------------------------------------------------------
// Pattern-level entry points

namespace detail {

template <GibbsModel M>
std::span<const typename M::Item> items_of(const M& model, const Pattern& y) {
  require(y.kind() == model.item_kind(), "pattern kind does not match the model");
  require(y.window.dim() == model.space_dim(), "pattern dimension does not match the model");
  if constexpr (std::is_same_v<typename M::Item, Point>)
    return y.points();
  else
    return y.segments();
}

inline std::vector<double> to_vector(const StatDelta& d, std::size_t k) { return {d.begin(), d.begin() + k}; }

}  // namespace detail

template <GibbsModel M>
SufficientStatistics sufficient_statistics(const M& model, const Pattern& y) {
  return model.statistics(y.window, detail::items_of(model, y));
}

/// t(y + u) - t(y).
template <GibbsModel M>
std::vector<double> statistic_delta_birth(const M& model, const Pattern& y, const typename M::Item& u) {
  const auto items = detail::items_of(model, y);
  typename M::Tracker tracker(model, y.window);
  tracker.reset(items);
  return detail::to_vector(tracker.change(items, -1, &u), model.dimension());
}

/// t(y - y_index) - t(y).
template <GibbsModel M>
std::vector<double> statistic_delta_death(const M& model, const Pattern& y, std::size_t index) {
  const auto items = detail::items_of(model, y);
  require(index < items.size(), "statistic_delta_death: index out of range");
  typename M::Tracker tracker(model, y.window);
  tracker.reset(items);
  return detail::to_vector(tracker.change(items, static_cast<int>(index), nullptr), model.dimension());
}

}  // namespace ssa

#endif  // SSA_MODELS_HPP
