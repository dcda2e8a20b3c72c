#ifndef SSA_ANALYSIS_HPP
#define SSA_ANALYSIS_HPP

// Post-processing of kept samples: quantiles, Epanechnikov-KDE mode, Student
// tests, batch-means Monte Carlo errors, asymptotic errors of the restricted
// MLE and total variation distance.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "ssa/core.hpp"
#include "ssa/mh_sampler.hpp"

namespace ssa {

/// Rows are samples, columns are parameter (or statistic) components.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::vector<std::string> labels, std::vector<std::vector<double>> rows)
      : labels_(std::move(labels)), rows_(std::move(rows)) {
    for (const auto& r : rows_) require(r.size() == labels_.size(), "sample matrix rows must match the label count");
  }

  static SampleMatrix from_parameters(const std::vector<ParameterVector>& samples, std::vector<std::string> labels) {
    std::vector<std::vector<double>> rows;
    rows.reserve(samples.size());
    for (const auto& s : samples) rows.push_back(s.values());
    return SampleMatrix(std::move(labels), std::move(rows));
  }

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
  double operator()(std::size_t i, std::size_t j) const { return rows_[i][j]; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c;
    c.reserve(rows_.size());
    for (const auto& r : rows_) c.push_back(r[j]);
    return c;
  }

  /// Keep rows from index `first` on.
  SampleMatrix tail(std::size_t first) const {
    first = std::min(first, rows_.size());
    return SampleMatrix(labels_, {rows_.begin() + static_cast<std::ptrdiff_t>(first), rows_.end()});
  }

 private:
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> rows_;
};

/// Linear interpolation between order statistics at position (n - 1) q.
inline double quantile(std::vector<double> column, double q) {
  require(!column.empty(), "quantile: empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile: q must lie in [0, 1]");
  std::sort(column.begin(), column.end());
  const double h = (static_cast<double>(column.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, column.size() - 1);
  return column[lo] + (h - static_cast<double>(lo)) * (column[hi] - column[lo]);
}

/// result[i][j] = quantile q[i] of column j.
inline std::vector<std::vector<double>> quantiles(const SampleMatrix& samples, std::span<const double> q) {
  require(samples.rows() > 0, "quantiles: empty sample set");
  std::vector<std::vector<double>> out(q.size(), std::vector<double>(samples.cols()));
  for (std::size_t j = 0; j < samples.cols(); ++j) {
    auto col = samples.column(j);
    std::sort(col.begin(), col.end());
    for (std::size_t i = 0; i < q.size(); ++i) out[i][j] = quantile(col, q[i]);
  }
  return out;
}

inline double mean(std::span<const double> x) {
  require(!x.empty(), "mean: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_sd(std::span<const double> x) {
  require(x.size() >= 2, "sample_sd: need two samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

inline double epanechnikov(double u) { return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

/// 2.34 * sd * n^(-1/5).
inline double default_bandwidth(std::span<const double> samples) {
  return 2.34 * sample_sd(samples) * std::pow(static_cast<double>(samples.size()), -0.2);
}

inline double kde_density(std::span<const double> samples, double x, double bandwidth) {
  double s = 0.0;
  for (double v : samples) s += epanechnikov((x - v) / bandwidth);
  return s / (static_cast<double>(samples.size()) * bandwidth);
}

/// Mode of the Epanechnikov KDE over a 512-point grid on [min, max]; ties go to the smallest abscissa.
inline double epanechnikov_map(std::span<const double> samples, double bandwidth) {
  require(samples.size() >= 2, "epanechnikov_map: need at least two samples");
  require(bandwidth > 0.0, "epanechnikov_map: bandwidth must be positive");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it, hi = *hi_it;
  if (lo == hi) return lo;
  constexpr int kGrid = 512;
  double best_x = lo, best = -1.0;
  for (int i = 0; i < kGrid; ++i) {
    const double x = lo + (hi - lo) * i / (kGrid - 1);
    const double f = kde_density(samples, x, bandwidth);
    if (f > best * (1.0 + 1e-12) + 1e-300) {
      best = f;
      best_x = x;
    }
  }
  return best_x;
}

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  bool degenerate = false;
};

/// Two-sided one-sample Student test of mean == mu0.
inline TTestResult one_sample_t_test(std::span<const double> samples, double mu0) {
  require(samples.size() >= 2, "t test: need at least two samples");
  const double n = static_cast<double>(samples.size());
  const double m = mean(samples);
  const double sd = sample_sd(samples);
  if (sd == 0.0) return {0.0, m == mu0 ? 1.0 : 0.0, true};
  const double t = (m - mu0) / (sd / std::sqrt(n));
  boost::math::students_t dist(n - 1.0);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {t, std::min(1.0, p), false};
}

/// Total variation distance 1/2 sum |p_i - q_i| between distributions on a common support.
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "tv_distance: supports differ");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  require(std::abs(sp - 1.0) <= 1e-9 && std::abs(sq - 1.0) <= 1e-9, "tv_distance: inputs must sum to one");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

// ---------------------------------------------------------------------------
// Monte Carlo errors

/// Long-run covariance of the row means by non-overlapping batch means with floor(sqrt(n)) batches.
inline Eigen::MatrixXd batch_means_covariance(const SampleMatrix& x) {
  const std::size_t n = x.rows(), k = x.cols();
  require(n >= 4, "batch means: need at least four samples");
  const std::size_t b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const std::size_t len = n / b;
  Eigen::MatrixXd means(b, k);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t r = i * len; r < (i + 1) * len; ++r) s += x(r, j);
      means(i, j) = s / static_cast<double>(len);
    }
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::MatrixXd centred = means.rowwise() - grand;
  return static_cast<double>(len) * (centred.transpose() * centred) / static_cast<double>(b - 1);
}

/// Monte Carlo standard error of the mean of one column.
inline double batch_means_mcse(std::span<const double> x) {
  std::vector<std::vector<double>> rows;
  rows.reserve(x.size());
  for (double v : x) rows.push_back({v});
  const auto cov = batch_means_covariance(SampleMatrix({"x"}, std::move(rows)));
  return std::sqrt(std::max(0.0, cov(0, 0)) / static_cast<double>(x.size()));
}

struct ErrorReport {
  std::vector<double> sigma;     // asymptotic standard deviation
  std::vector<double> sigma_mc;  // Monte Carlo standard error
  std::size_t n_mc = 0;
  bool singular = false;
  double condition = 0.0;
};

/// Errors of the restricted MLE from thinned statistics drawn at the estimate.
/// The Fisher information is the covariance of t(X); singular information falls
/// back to the pseudo-inverse and sets `singular`.
inline ErrorReport asymptotic_errors_from_statistics(const SampleMatrix& stats) {
  const std::size_t n = stats.rows(), k = stats.cols();
  require(n >= 4, "asymptotic errors: need at least four samples");
  Eigen::MatrixXd t(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) t(i, j) = stats(i, j);
  const Eigen::MatrixXd centred = t.rowwise() - t.colwise().mean();
  const Eigen::MatrixXd info = centred.transpose() * centred / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double max_ev = ev.cwiseAbs().maxCoeff();
  const double tol = std::max(1e-300, max_ev * 1e-12 * static_cast<double>(k));
  ErrorReport rep;
  rep.n_mc = n;
  Eigen::VectorXd inv_ev(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (ev(i) > tol) {
      inv_ev(i) = 1.0 / ev(i);
    } else {
      inv_ev(i) = 0.0;
      rep.singular = true;
    }
  }
  rep.condition = rep.singular ? std::numeric_limits<double>::infinity() : ev.maxCoeff() / ev.minCoeff();
  const Eigen::MatrixXd inv = eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::MatrixXd sandwich = inv * batch_means_covariance(stats) * inv / static_cast<double>(n);
  for (std::size_t i = 0; i < k; ++i) {
    rep.sigma.push_back(std::sqrt(std::max(0.0, inv(i, i))));
    rep.sigma_mc.push_back(std::sqrt(std::max(0.0, sandwich(i, i))));
  }
  return rep;
}

template <GibbsModel M>
ErrorReport asymptotic_errors(const M& model, const Window& window, const ParameterVector& theta_hat, long long n_mc,
                              const ChainSettings& chain) {
  require(n_mc >= 100, "asymptotic errors: n_mc must be at least 100");
  const auto sample = mean_statistics(model, theta_hat, n_mc, chain, window);
  return asymptotic_errors_from_statistics(SampleMatrix(model.statistic_names(), sample.rows));
}

}  // namespace ssa

#endif  // SSA_ANALYSIS_HPP
