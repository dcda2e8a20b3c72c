#ifndef SSA_CORE_HPP
#define SSA_CORE_HPP

// Value types shared by every module: observation windows, points, segments,
// patterns, parameter / statistic vectors and the uniform prior box.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ssa {

/// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const char* what) {
  if (!condition) throw ContractViolation(what);
}

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  friend constexpr bool operator==(const Point&, const Point&) = default;
};

inline double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

/// Reduce an angle into [0, pi).
inline double normalize_orientation(double xi) {
  constexpr double pi = std::numbers::pi;
  double r = std::fmod(xi, pi);
  if (r < 0.0) r += pi;
  if (r >= pi) r = 0.0;
  return r;
}

/// A fixed-length segment. The orientation is reduced into [0, pi) on construction.
class Segment {
 public:
  Segment() = default;
  Segment(Point center, double orientation, double length)
      : center_(center), orientation_(normalize_orientation(orientation)), length_(length) {
    require(length > 0.0, "segment length must be positive");
  }

  const Point& center() const { return center_; }
  double orientation() const { return orientation_; }
  double length() const { return length_; }

  std::array<Point, 2> endpoints() const {
    const double hx = 0.5 * length_ * std::cos(orientation_);
    const double hy = 0.5 * length_ * std::sin(orientation_);
    return {Point{center_.x - hx, center_.y - hy, center_.z}, Point{center_.x + hx, center_.y + hy, center_.z}};
  }

  friend bool operator==(const Segment&, const Segment&) = default;

 private:
  Point center_{};
  double orientation_ = 0.0;
  double length_ = 1.0;
};

/// Axis-aligned observation window in 2 or 3 dimensions.
class Window {
 public:
  Window() = default;
  Window(Point lower, Point upper, int dim = 2) : dim_(dim), lower_(lower), upper_(upper) {
    require(dim == 2 || dim == 3, "window dimension must be 2 or 3");
    if (dim == 2) lower_.z = upper_.z = 0.0;
    for (int i = 0; i < dim; ++i) require(upper_[i] > lower_[i], "window upper bound must exceed lower bound");
  }

  static Window unit_square() { return Window({0, 0, 0}, {1, 1, 0}, 2); }
  static Window box2(double x0, double x1, double y0, double y1) { return Window({x0, y0, 0}, {x1, y1, 0}, 2); }
  static Window box3(Point lo, Point hi) { return Window(lo, hi, 3); }

  int dim() const { return dim_; }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }
  double extent(int i) const { return upper_[i] - lower_[i]; }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim_; ++i) v *= extent(i);
    return v;
  }

  bool contains(const Point& p) const {
    for (int i = 0; i < dim_; ++i)
      if (!(p[i] >= lower_[i] && p[i] <= upper_[i])) return false;
    return dim_ == 3 || p.z == 0.0;
  }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  int dim_ = 2;
  Point lower_{0, 0, 0};
  Point upper_{1, 1, 0};
};

enum class ItemKind { points, segments };

/// A finite configuration of points or segments observed in a window.
struct Pattern {
  Window window;
  std::variant<std::vector<Point>, std::vector<Segment>> items;

  Pattern() = default;
  Pattern(Window w, std::vector<Point> pts) : window(w), items(std::move(pts)) {}
  Pattern(Window w, std::vector<Segment> segs) : window(w), items(std::move(segs)) {}

  ItemKind kind() const { return items.index() == 0 ? ItemKind::points : ItemKind::segments; }
  std::size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, items);
  }
  const std::vector<Point>& points() const { return std::get<std::vector<Point>>(items); }
  const std::vector<Segment>& segments() const { return std::get<std::vector<Segment>>(items); }
};

struct PatternViolation {
  std::size_t index;
  std::string reason;
};

/// First out-of-window item, if any. Segment orientations are already reduced by construction.
inline std::optional<PatternViolation> validate(const Pattern& p) {
  if (p.kind() == ItemKind::points) {
    const auto& pts = p.points();
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (!p.window.contains(pts[i])) return PatternViolation{i, "out-of-window"};
  } else {
    const auto& segs = p.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (!p.window.contains(segs[i].center())) return PatternViolation{i, "out-of-window"};
      if (!(segs[i].orientation() >= 0.0 && segs[i].orientation() < std::numbers::pi))
        return PatternViolation{i, "orientation-out-of-range"};
    }
  }
  return std::nullopt;
}

/// Dense real vector tagged by its role so parameters and statistics cannot be mixed up.
template <class Tag>
class TaggedVector {
 public:
  TaggedVector() = default;
  explicit TaggedVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit TaggedVector(std::vector<double> v) : values_(std::move(v)) {}
  TaggedVector(std::initializer_list<double> v) : values_(v) {}

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  TaggedVector& operator+=(const TaggedVector& o) {
    require(o.size() == size(), "vector dimension mismatch");
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  TaggedVector& operator-=(const TaggedVector& o) {
    require(o.size() == size(), "vector dimension mismatch");
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  friend TaggedVector operator+(TaggedVector a, const TaggedVector& b) { return a += b; }
  friend TaggedVector operator-(TaggedVector a, const TaggedVector& b) { return a -= b; }
  friend bool operator==(const TaggedVector&, const TaggedVector&) = default;

 private:
  std::vector<double> values_;
};

struct ParameterTag {};
struct StatisticTag {};
using ParameterVector = TaggedVector<ParameterTag>;
using SufficientStatistics = TaggedVector<StatisticTag>;

/// log f(y|theta) = theta . t(y); the normalising constant is never evaluated.
inline double log_unnorm_density(const ParameterVector& theta, const SufficientStatistics& t) {
  require(theta.size() == t.size(), "parameter and statistic dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += theta[i] * t[i];
  return s;
}

/// Uniform prior on a closed axis-aligned box.
class PriorBox {
 public:
  PriorBox() = default;
  PriorBox(std::vector<double> lower, std::vector<double> upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    require(lower_.size() == upper_.size() && !lower_.empty(), "prior box bounds must have equal non-zero length");
    for (std::size_t i = 0; i < lower_.size(); ++i)
      require(upper_[i] > lower_[i], "prior box upper bound must exceed lower bound");
  }

  std::size_t size() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  bool contains(const ParameterVector& theta) const {
    require(theta.size() == size(), "parameter dimension does not match prior box");
    for (std::size_t i = 0; i < size(); ++i)
      if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) return false;
    return true;
  }

  double log_density(const ParameterVector& theta) const {
    if (!contains(theta)) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s -= std::log(upper_[i] - lower_[i]);
    return s;
  }

  ParameterVector center() const {
    ParameterVector c(size());
    for (std::size_t i = 0; i < size(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
    return c;
  }

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

inline double prior_log_density(const PriorBox& prior, const ParameterVector& theta) { return prior.log_density(theta); }

}  // namespace ssa

#endif  // SSA_CORE_HPP
