#pragma once

// Finite-level grid calculus: the lattice {k/n}, grid functions living on a
// contiguous segment of it, forward-difference derivative, step-weighted
// integral and a cross-level "shadow" estimate for sums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hgrid/summation.hpp"

namespace hgrid {

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Snaps a real coordinate to an integer lattice index when it lies within
/// 1e-9 cells of one; returns false otherwise.
inline bool snap_to_lattice(double value, int n, std::int64_t& index) {
  const double scaled = value * static_cast<double>(n);
  const double r = std::round(scaled);
  if (std::abs(scaled - r) > 1e-9) return false;
  index = static_cast<std::int64_t>(r);
  return true;
}

/// The finite surrogate of the infinite level: step 1/n and a symmetric
/// spatial window [-halfwidth, halfwidth) measured in whole cells.
class GridLevel {
 public:
  static constexpr double kDefaultHalfwidth = 8.0;

  explicit GridLevel(int n) : GridLevel(n, default_halfwidth(n)) {}

  /// min(8, n/2) rounded down to whole cells, at least one cell.
  static double default_halfwidth(int n) {
    if (n < 1) throw GridError("grid level n must be positive");
    const std::int64_t nn = n;
    return static_cast<double>(std::max<std::int64_t>(1, std::min(8 * nn, nn * nn / 2))) / n;
  }

  GridLevel(int n, double spatial_halfwidth) : n_(n) {
    if (n < 1) throw GridError("grid level n must be positive");
    std::int64_t cells = 0;
    if (!(spatial_halfwidth > 0) || !snap_to_lattice(spatial_halfwidth, n, cells) || cells < 1) {
      throw GridError("spatial halfwidth must be a positive multiple of 1/n");
    }
    if (cells > std::max<std::int64_t>(1, static_cast<std::int64_t>(n) * n / 2)) {
      throw GridError("spatial halfwidth must not exceed n/2");
    }
    window_cells_ = cells;
  }

  int n() const { return n_; }
  double step() const { return 1.0 / n_; }
  /// Halfwidth of the spatial window in cells of width 1/n.
  std::int64_t window_cells() const { return window_cells_; }
  double spatial_halfwidth() const { return static_cast<double>(window_cells_) / n_; }
  /// Coordinate of lattice index k, computed as k/n in one rounding.
  double coordinate(std::int64_t k) const { return static_cast<double>(k) / n_; }

  friend bool operator==(const GridLevel&, const GridLevel&) = default;

 private:
  int n_;
  std::int64_t window_cells_ = 0;
};

/// A contiguous run of lattice points {k/n : first <= k < first + size}.
struct Lattice {
  int n = 1;
  std::int64_t first = 0;
  std::size_t size = 0;

  double step() const { return 1.0 / n; }
  double point(std::size_t i) const {
    return static_cast<double>(first + static_cast<std::int64_t>(i)) / n;
  }
  /// Local index of lattice coordinate `k`, or npos if outside.
  std::size_t local(std::int64_t k) const {
    if (k < first || k >= first + static_cast<std::int64_t>(size)) return npos;
    return static_cast<std::size_t>(k - first);
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  friend bool operator==(const Lattice&, const Lattice&) = default;
};

/// The time grid [0,1]_H: points k/n for k = 0..n.
inline Lattice time_grid(const GridLevel& level) {
  return Lattice{level.n(), 0, static_cast<std::size_t>(level.n()) + 1};
}

/// The truncated spatial grid: points j/n for -W <= j < W.
inline Lattice spatial_grid(const GridLevel& level) {
  return Lattice{level.n(), -level.window_cells(), static_cast<std::size_t>(2 * level.window_cells())};
}

class GridFunction {
 public:
  GridFunction(Lattice lattice, std::vector<double> values)
      : lattice_(lattice), values_(std::move(values)) {
    if (values_.size() != lattice_.size) {
      throw GridError("grid function has " + std::to_string(values_.size()) + " values for " +
                      std::to_string(lattice_.size) + " grid points");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw GridError("grid function value at index " + std::to_string(i) + " is not finite");
      }
    }
  }

  /// Samples `fn` at every lattice point.
  template <class Fn>
  static GridFunction sample(Lattice lattice, Fn&& fn) {
    std::vector<double> v(lattice.size);
    for (std::size_t i = 0; i < lattice.size; ++i) v[i] = fn(lattice.point(i));
    return GridFunction(lattice, std::move(v));
  }

  const Lattice& lattice() const { return lattice_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double step() const { return lattice_.step(); }

 private:
  Lattice lattice_;
  std::vector<double> values_;
};

/// Half-open range of local indices [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Forward difference quotient (f[k+1] - f[k]) * n. The result is one point
/// shorter: the last grid point has no successor.
inline GridFunction grid_derivative(const GridFunction& f) {
  if (f.size() < 2) throw GridError("derivative undefined: grid function has fewer than 2 points");
  const double n = f.lattice().n;
  std::vector<double> d(f.size() - 1);
  for (std::size_t k = 0; k + 1 < f.size(); ++k) d[k] = (f[k + 1] - f[k]) * n;
  Lattice l = f.lattice();
  l.size -= 1;
  return GridFunction(l, std::move(d));
}

/// step * sum_{k in range} f[k]; an empty range integrates to 0.
inline double grid_integral(const GridFunction& f, IndexRange range) {
  if (range.end < range.begin || range.end > f.size()) {
    throw GridError("integration range [" + std::to_string(range.begin) + ", " +
                    std::to_string(range.end) + ") outside grid of " + std::to_string(f.size()) +
                    " points");
  }
  CompensatedSum s;
  for (std::size_t k = range.begin; k < range.end; ++k) s.add(f[k]);
  return s.value() / f.lattice().n;
}

inline double grid_integral(const GridFunction& f) { return grid_integral(f, {0, f.size()}); }

/// x -> I_[a, x)[f] for x = a, ..., last point + 1/n. The result has
/// size() - a + 1 points, starting at lattice coordinate of `a`.
inline GridFunction integral_function(const GridFunction& f, std::size_t a = 0) {
  if (a > f.size()) throw GridError("integral base point outside grid");
  std::vector<double> v;
  v.reserve(f.size() - a + 1);
  CompensatedSum s;
  v.push_back(0.0);
  for (std::size_t k = a; k < f.size(); ++k) {
    s.add(f[k]);
    v.push_back(s.value() / f.lattice().n);
  }
  Lattice l{f.lattice().n, f.lattice().first + static_cast<std::int64_t>(a), v.size()};
  return GridFunction(l, std::move(v));
}

struct FundamentalTheoremSides {
  double lhs = 0;  ///< I_[x, y)[Δf/Δt]
  double rhs = 0;  ///< f(y) - f(x)
};

inline FundamentalTheoremSides fundamental_theorem_check(const GridFunction& f, std::size_t x_idx,
                                                          std::size_t y_idx) {
  if (!(x_idx < y_idx) || y_idx >= f.size()) {
    throw GridError("fundamental theorem check needs x_idx < y_idx < size");
  }
  const GridFunction d = grid_derivative(f);
  return {grid_integral(d, {x_idx, y_idx}), f[y_idx] - f[x_idx]};
}

/// Cross-level estimate of the shadow of a level-indexed sum.
struct ShadowEstimate {
  std::vector<int> levels;
  std::vector<double> values;
  double estimate = 0;
  double spread = 0;  ///< max pairwise difference over the last three levels
  bool converged = false;
};

/// Builds a ShadowEstimate from per-level values.
inline ShadowEstimate shadow_from_levels(std::vector<int> levels, std::vector<double> values, double tol) {
  if (levels.size() < 3 || levels.size() != values.size()) {
    throw GridError("shadow estimate needs at least 3 levels");
  }
  ShadowEstimate s;
  s.levels = std::move(levels);
  s.values = std::move(values);
  s.estimate = s.values.back();
  const auto tail = std::span<const double>(s.values).last(3);
  s.spread = *std::max_element(tail.begin(), tail.end()) - *std::min_element(tail.begin(), tail.end());
  s.converged = s.spread <= tol;
  return s;
}

/// (1/n) * sum of f over grid points k/n in [a, b), for each level. For
/// Riemann-integrable f the estimate approaches the classical integral; for
/// pathological f the value depends on the chosen level sequence, which
/// shows up as converged == false.
template <class Fn>
ShadowEstimate alpha_integral(Fn&& f, double a, double b, const std::vector<int>& levels, double tol) {
  if (levels.size() < 3) throw GridError("alpha integral needs at least 3 levels");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] <= levels[i - 1]) throw GridError("alpha integral levels must be strictly increasing");
  }
  if (levels.front() < 1) throw GridError("grid level n must be positive");
  if (!(a <= b)) throw GridError("alpha integral domain must satisfy a <= b");

  // first lattice index k with k/n >= v, snapping near-integer k*n
  auto first_at_or_above = [](double v, int n) {
    std::int64_t k = 0;
    if (snap_to_lattice(v, n, k)) return k;
    return static_cast<std::int64_t>(std::ceil(v * n));
  };

  std::vector<double> values;
  values.reserve(levels.size());
  for (int n : levels) {
    const std::int64_t lo = first_at_or_above(a, n);
    const std::int64_t hi = first_at_or_above(b, n);
    CompensatedSum s;
    for (std::int64_t k = lo; k < hi; ++k) {
      const double x = static_cast<double>(k) / n;
      const double v = f(x);
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "integrand is not finite at grid point x = " << x << " (k = " << k << ", n = " << n << ")";
        throw GridError(msg.str());
      }
      s.add(v);
    }
    values.push_back(s.value() / n);
  }
  return shadow_from_levels(levels, std::move(values), tol);
}

}  // namespace hgrid
