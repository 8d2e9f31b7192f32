#pragma once

// Grid functions standing in for distributions: Dirac families, the grid
// derivative of delta, pairing with test functions and macroscopic
// equivalence against a finite family of test functions.
//
// Sign convention: the grid derivative of delta, n^2 (delta_{0} - delta_{1/n}),
// pairs with phi to n (phi(0) - phi(1/n)), which tends to -phi'(0) like the
// classical distributional derivative.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgrid/grid.hpp"
#include "hgrid/test_function.hpp"

namespace hgrid {

enum class Axis { Space, Time };

class GridDistribution {
 public:
  GridDistribution(GridLevel level, GridFunction gf, Axis axis = Axis::Space)
      : level_(level), gf_(std::move(gf)), axis_(axis) {
    if (gf_.lattice().n != level_.n()) throw GridError("grid function level does not match distribution level");
  }

  const GridLevel& level() const { return level_; }
  const GridFunction& grid_function() const { return gf_; }
  Axis axis() const { return axis_; }

 private:
  GridLevel level_;
  GridFunction gf_;
  Axis axis_;
};

inline Lattice axis_lattice(const GridLevel& level, Axis axis) {
  return axis == Axis::Space ? spatial_grid(level) : time_grid(level);
}

namespace detail {
inline std::size_t on_grid_index(const Lattice& l, double at, const char* what) {
  std::int64_t k = 0;
  if (!snap_to_lattice(at, l.n, k)) {
    throw GridError(std::string(what) + " center " + std::to_string(at) + " is not a grid point");
  }
  const std::size_t i = l.local(k);
  if (i == Lattice::npos) throw GridError(std::string(what) + " center outside the grid window");
  return i;
}
}  // namespace detail

/// n at the grid point `at`, 0 elsewhere.
inline GridDistribution dirac(const GridLevel& level, double at, Axis axis = Axis::Space) {
  const Lattice l = axis_lattice(level, axis);
  std::vector<double> v(l.size, 0.0);
  v[detail::on_grid_index(l, at, "dirac")] = level.n();
  return GridDistribution(level, GridFunction(l, std::move(v)), axis);
}

/// n/2 at `at` and at its successor.
inline GridDistribution split_dirac(const GridLevel& level, double at, Axis axis = Axis::Space) {
  const Lattice l = axis_lattice(level, axis);
  const std::size_t i = detail::on_grid_index(l, at, "split dirac");
  if (i + 1 >= l.size) throw GridError("split dirac needs the successor of its center on the grid");
  std::vector<double> v(l.size, 0.0);
  v[i] = level.n() / 2.0;
  v[i + 1] = level.n() / 2.0;
  return GridDistribution(level, GridFunction(l, std::move(v)), axis);
}

/// Grid derivative of the Dirac grid function: n^2 at `at`, -n^2 at the next point.
inline GridDistribution dirac_derivative(const GridLevel& level, double at, Axis axis = Axis::Space) {
  const Lattice l = axis_lattice(level, axis);
  const std::size_t i = detail::on_grid_index(l, at, "dirac derivative");
  if (i + 1 >= l.size) throw GridError("dirac derivative center is the last grid point");
  const double n2 = static_cast<double>(level.n()) * level.n();
  std::vector<double> v(l.size, 0.0);
  v[i] = n2;
  v[i + 1] = -n2;
  return GridDistribution(level, GridFunction(l, std::move(v)), axis);
}

inline GridDistribution scaled(const GridDistribution& d, double c) {
  const auto src = d.grid_function().values();
  std::vector<double> v(src.begin(), src.end());
  for (double& x : v) x *= c;
  return GridDistribution(d.level(), GridFunction(d.grid_function().lattice(), std::move(v)), d.axis());
}

/// Samples a real function onto the distribution's grid.
template <class Fn>
GridDistribution from_function(const GridLevel& level, Fn&& fn, Axis axis = Axis::Space) {
  return GridDistribution(level, GridFunction::sample(axis_lattice(level, axis), fn), axis);
}

/// step * sum_k gf[k] * phi(point_k); the other variable of phi is held at
/// `other`.
inline double pair(const GridDistribution& d, const TestFunction& phi, double other = 0.0) {
  const Lattice& l = d.grid_function().lattice();
  const Support& s = phi.support();
  const double lo = d.axis() == Axis::Space ? s.x_lo : s.t_lo;
  const double hi = d.axis() == Axis::Space ? s.x_hi : s.t_hi;
  const double win_lo = l.point(0);
  const double win_hi = static_cast<double>(l.first + static_cast<std::int64_t>(l.size)) / l.n;
  if (!(lo >= win_lo && hi <= win_hi)) throw GridError("window too small for test function support");
  CompensatedSum sum;
  const auto vals = d.grid_function().values();
  for (std::size_t k = 0; k < l.size; ++k) {
    if (vals[k] == 0.0) continue;
    const double p = l.point(k);
    sum.add(vals[k] * (d.axis() == Axis::Space ? phi(other, p) : phi(p, other)));
  }
  return sum.value() / l.n;
}

struct PairingDiscrepancy {
  std::size_t phi_index = 0;
  double first = 0;
  double second = 0;
  double difference = 0;
};

struct EquivalenceReport {
  bool equivalent = true;
  double tolerance = 0;
  std::vector<PairingDiscrepancy> entries;  ///< one per test function
};

/// Macroscopic equality checked on a finite test-function family.
inline EquivalenceReport equivalent(const GridDistribution& d1, const GridDistribution& d2,
                                    const std::vector<TestFunction>& phis, double tol, double other = 0.0) {
  if (!(d1.level() == d2.level()) || d1.axis() != d2.axis()) {
    throw GridError("cannot compare distributions on different levels");
  }
  EquivalenceReport r;
  r.tolerance = tol;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const double a = pair(d1, phis[i], other);
    const double b = pair(d2, phis[i], other);
    const double diff = std::abs(a - b);
    r.entries.push_back({i, a, b, diff});
    if (!(diff <= tol)) r.equivalent = false;
  }
  return r;
}

/// Spatial bumps centered at -1, -0.75, ..., 1 with half-widths 0.5 and 1.
inline std::vector<TestFunction> default_test_family() {
  std::vector<TestFunction> out;
  for (double w : {0.5, 1.0}) {
    for (int i = -4; i <= 4; ++i) {
      out.push_back(TestFunction::bump_product(std::nullopt, BumpAxis{i * 0.25, w}));
    }
  }
  return out;
}

}  // namespace hgrid
