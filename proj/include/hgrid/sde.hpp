#pragma once

// Grid ODE/SDE solving. Each noise path drives one explicit Euler recursion
//   x(t + 1/n) = x(t) + (1/n) (f(t, x) + h(t, x) xi(t)),
// and ensembles are reduced in a streaming fashion: trajectories are handed
// to accumulators and never stored wholesale.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgrid/expr.hpp"
#include "hgrid/grid.hpp"
#include "hgrid/noise.hpp"
#include "hgrid/summation.hpp"

namespace hgrid {

inline constexpr double kDivergenceBound = 1e12;

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t path, int step)
      : std::runtime_error("trajectory diverged at step " + std::to_string(step) + " of path " + std::to_string(path)),
        path_(path),
        step_(step) {}
  std::uint64_t path() const { return path_; }
  int step() const { return step_; }

 private:
  std::uint64_t path_;
  int step_;
};

/// dx/dt = f(t,x) + h(t,x) xi on the level-n time grid, x(t0) = x0.
class CauchyProblem {
 public:
  CauchyProblem(Expr drift, Expr diffusion, double x0, GridLevel level, int t0_index = 0)
      : drift_(std::move(drift)),
        diffusion_(std::move(diffusion)),
        f_(drift_),
        h_(diffusion_),
        x0_(x0),
        level_(level),
        t0_(t0_index) {
    if (!std::isfinite(x0)) throw std::invalid_argument("initial value must be finite");
    if (t0_index < 0 || t0_index > level.n()) throw std::invalid_argument("initial time index outside [0, n]");
  }

  const Expr& drift() const { return drift_; }
  const Expr& diffusion() const { return diffusion_; }
  double f(double t, double x) const { return f_(t, x); }
  double h(double t, double x) const { return h_(t, x); }
  double x0() const { return x0_; }
  int t0_index() const { return t0_; }
  const GridLevel& level() const { return level_; }

  CauchyProblem with_x0(double x0) const { return CauchyProblem(drift_, diffusion_, x0, level_, t0_); }
  CauchyProblem with_level(GridLevel level) const { return CauchyProblem(drift_, diffusion_, x0_, level, t0_); }

 private:
  Expr drift_, diffusion_;
  CompiledExpr f_, h_;
  double x0_;
  GridLevel level_;
  int t0_;
};

struct Trajectory {
  std::vector<double> values;  ///< x(t_k), k = 0..n; constant x0 before t0
  std::uint64_t path_id = 0;
};

/// Runs the recursion in place. `noise` may be empty (deterministic grid
/// ODE); otherwise it must hold at least n values and only xi(t_0..t_{n-1})
/// are read.
inline void integrate(const CauchyProblem& p, std::span<const double> noise, std::uint64_t path_id,
                      std::vector<double>& x) {
  const int n = p.level().n();
  if (!noise.empty() && noise.size() < static_cast<std::size_t>(n)) {
    throw std::invalid_argument("noise path shorter than the time grid");
  }
  x.resize(static_cast<std::size_t>(n) + 1);
  const int k0 = p.t0_index();
  for (int k = 0; k <= k0; ++k) x[static_cast<std::size_t>(k)] = p.x0();
  const double dn = n;
  for (int k = k0; k < n; ++k) {
    const double t = k / dn;
    const double xk = x[static_cast<std::size_t>(k)];
    double incr = p.f(t, xk);
    if (!noise.empty()) incr += p.h(t, xk) * noise[static_cast<std::size_t>(k)];
    const double next = xk + incr / dn;
    if (!(std::abs(next) <= kDivergenceBound)) throw DivergenceError(path_id, k + 1);
    x[static_cast<std::size_t>(k) + 1] = next;
  }
}

inline Trajectory solve_grid_ode(const CauchyProblem& p, std::span<const double> noise = {},
                                 std::uint64_t path_id = 0) {
  Trajectory tr;
  tr.path_id = path_id;
  integrate(p, noise, path_id, tr.values);
  return tr;
}

inline Trajectory solve_grid_ode(const CauchyProblem& p, const NoisePath& noise, std::uint64_t path_id = 0) {
  if (noise.n != p.level().n()) throw std::invalid_argument("noise path level does not match the problem level");
  return solve_grid_ode(p, std::span<const double>(noise.values), path_id);
}

/// Simulates one trajectory per ensemble member and feeds each to an
/// accumulator created by `make()`. Accumulators must provide
///   void consume(const NoisePath&, const Trajectory&);
///   void merge(const Acc&);
/// Per-block accumulators are merged in block order, so the result does not
/// depend on the number of workers.
template <class Ensemble, class MakeAcc>
auto simulate_ensemble(const CauchyProblem& p, const Ensemble& ens, MakeAcc&& make, const ParallelOptions& opts = {}) {
  using Acc = decltype(make());
  if (ens.level().n() != p.level().n()) throw std::invalid_argument("ensemble level does not match the problem level");
  auto blocks = run_blocks<std::optional<Acc>>(ens.size(), opts, [&](std::uint64_t b, std::uint64_t e) {
    std::optional<Acc> acc(make());
    NoisePath path;
    Trajectory tr;
    for (std::uint64_t i = b; i < e; ++i) {
      ens.fill(i, path);
      tr.path_id = i;
      integrate(p, path.values, i, tr.values);
      acc->consume(path, tr);
    }
    return acc;
  });
  Acc result = make();
  for (const auto& b : blocks) result.merge(*b);
  return result;
}

// ---------------------------------------------------------------------------
// Binning. Positions are converted to cell units c = x n + 1e-9 before
// taking floor(c), so values within 1e-9 cells below an edge (rounding noise
// from sums of +-sqrt(n)/n) land in the upper cell. Bins are [j/n, (j+1)/n).

inline constexpr double kEdgeSnap = 1e-9;

inline double cell_coordinate(double x, int n) { return x * n + kEdgeSnap; }

/// rho(t, x) on the window [-W/n, W/n) for a set of saved time slices.
class DensityField {
 public:
  DensityField() = default;
  DensityField(GridLevel level, std::vector<int> slices)
      : level_(level),
        slices_(std::move(slices)),
        counts_(slices_.size(), std::vector<std::uint64_t>(static_cast<std::size_t>(2 * level.window_cells()), 0)),
        overflow_(slices_.size(), 0) {
    for (int s : slices_) {
      if (s < 0 || s > level.n()) throw std::invalid_argument("density time slice outside [0, n]");
    }
  }

  const GridLevel& level() const { return level_; }
  std::span<const int> slices() const { return slices_; }
  std::size_t bins() const { return static_cast<std::size_t>(2 * level_.window_cells()); }
  std::uint64_t total() const { return total_; }
  std::uint64_t count(std::size_t slice, std::size_t bin) const { return counts_[slice][bin]; }
  std::uint64_t overflow(std::size_t slice) const { return overflow_[slice]; }
  double bin_left_edge(std::size_t bin) const {
    return level_.coordinate(static_cast<std::int64_t>(bin) - level_.window_cells());
  }
  /// Bin holding `x`, or bins() when outside the window.
  std::size_t bin_of(double x) const {
    const double c = std::floor(cell_coordinate(x, level_.n()));
    const double j = c + static_cast<double>(level_.window_cells());
    if (!(j >= 0.0) || j >= static_cast<double>(bins())) return bins();
    return static_cast<std::size_t>(j);
  }
  /// count / (eps |R|) = count * n / |R|.
  double rho(std::size_t slice, std::size_t bin) const {
    return static_cast<double>(counts_[slice][bin]) * level_.n() / static_cast<double>(total_);
  }
  double overflow_fraction(std::size_t slice) const {
    return static_cast<double>(overflow_[slice]) / static_cast<double>(total_);
  }
  /// eps * sum_x rho(t, x) over the window.
  double window_mass(std::size_t slice) const {
    std::uint64_t c = 0;
    for (auto v : counts_[slice]) c += v;
    return static_cast<double>(c) / static_cast<double>(total_);
  }
  /// Index into slices() of time index k, or npos.
  std::size_t slice_of(int k) const {
    auto it = std::find(slices_.begin(), slices_.end(), k);
    return it == slices_.end() ? npos : static_cast<std::size_t>(it - slices_.begin());
  }

  void consume(const NoisePath&, const Trajectory& tr) { add(tr.values); }

  void add(std::span<const double> xs) {
    for (std::size_t s = 0; s < slices_.size(); ++s) {
      const std::size_t b = bin_of(xs[static_cast<std::size_t>(slices_[s])]);
      if (b == bins()) {
        ++overflow_[s];
      } else {
        ++counts_[s][b];
      }
    }
    ++total_;
  }

  void merge(const DensityField& other) {
    for (std::size_t s = 0; s < slices_.size(); ++s) {
      for (std::size_t b = 0; b < bins(); ++b) counts_[s][b] += other.counts_[s][b];
      overflow_[s] += other.overflow_[s];
    }
    total_ += other.total_;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  GridLevel level_{1, 0.5};
  std::vector<int> slices_;
  std::vector<std::vector<std::uint64_t>> counts_;
  std::vector<std::uint64_t> overflow_;
  std::uint64_t total_ = 0;
};

inline std::vector<int> all_time_indices(const GridLevel& level) {
  std::vector<int> v(static_cast<std::size_t>(level.n()) + 1);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

/// Converts saved times to time indices; every time must be a grid point.
inline std::vector<int> time_indices(const GridLevel& level, std::span<const double> times) {
  std::vector<int> out;
  for (double t : times) {
    std::int64_t k = 0;
    if (!snap_to_lattice(t, level.n(), k) || k < 0 || k > level.n()) {
      throw std::invalid_argument("time slice " + format_number(t) + " is not a point of [0,1] at level " +
                                  std::to_string(level.n()));
    }
    out.push_back(static_cast<int>(k));
  }
  return out;
}

template <class Ensemble>
DensityField density(const CauchyProblem& p, const Ensemble& ens, std::vector<int> slices,
                     const ParallelOptions& opts = {}) {
  return simulate_ensemble(p, ens, [&] { return DensityField(p.level(), slices); }, opts);
}

/// E[x(t_k)] and E[x(t_k)^2] for every k, with compensated sums.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int n = 0) : sum_(static_cast<std::size_t>(n) + 1), sum_sq_(static_cast<std::size_t>(n) + 1) {}

  void consume(const NoisePath&, const Trajectory& tr) {
    for (std::size_t k = 0; k < sum_.size(); ++k) {
      sum_[k].add(tr.values[k]);
      sum_sq_[k].add(tr.values[k] * tr.values[k]);
    }
    ++count_;
  }
  void merge(const MomentAccumulator& o) {
    for (std::size_t k = 0; k < sum_.size(); ++k) {
      sum_[k].merge(o.sum_[k]);
      sum_sq_[k].merge(o.sum_sq_[k]);
    }
    count_ += o.count_;
  }
  double mean(std::size_t k) const { return sum_[k].value() / static_cast<double>(count_); }
  double second_moment(std::size_t k) const { return sum_sq_[k].value() / static_cast<double>(count_); }
  std::uint64_t count() const { return count_; }

 private:
  std::vector<CompensatedSum> sum_, sum_sq_;
  std::uint64_t count_ = 0;
};

/// Accumulates mean and sample variance of a scalar path functional
/// g(noise, trajectory).
template <class G>
class FunctionalAccumulator {
 public:
  explicit FunctionalAccumulator(G g) : g_(std::move(g)) {}
  void consume(const NoisePath& xi, const Trajectory& tr) {
    const double v = g_(xi, tr);
    if (!std::isfinite(v)) throw std::runtime_error("functional is not finite on path " + std::to_string(tr.path_id));
    sum_.add(v);
    sum_sq_.add(v * v);
    ++count_;
  }
  void merge(const FunctionalAccumulator& o) {
    sum_.merge(o.sum_);
    sum_sq_.merge(o.sum_sq_);
    count_ += o.count_;
  }
  Expectation result(bool exhaustive) const {
    Expectation r;
    r.count = count_;
    if (count_ == 0) return r;
    const double m = static_cast<double>(count_);
    r.mean = sum_.value() / m;
    if (!exhaustive && count_ > 1) {
      r.std_error = std::sqrt(std::max(0.0, (sum_sq_.value() - m * r.mean * r.mean) / (m - 1)) / m);
    }
    return r;
  }

 private:
  G g_;
  CompensatedSum sum_, sum_sq_;
  std::uint64_t count_ = 0;
};

template <class Ensemble, class G>
Expectation trajectory_expectation(const CauchyProblem& p, const Ensemble& ens, G g, const ParallelOptions& opts = {}) {
  auto acc = simulate_ensemble(p, ens, [&] { return FunctionalAccumulator<G>(g); }, opts);
  return acc.result(ens.exhaustive());
}

// ---------------------------------------------------------------------------
// Event probabilities P(E) = |E| / |R| as exact count ratios.

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Rational reduced(std::uint64_t num, std::uint64_t den) {
    const std::uint64_t g = std::gcd(num, den);
    return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Event {a <= x(t_k) < b}; infinite bounds allowed. Bounds that are grid
/// points are compared in exact cell units so bin-aligned events agree
/// exactly with density sums.
class EventCounter {
 public:
  EventCounter(const GridLevel& level, int t_index, double a, double b)
      : n_(level.n()), k_(t_index), lo_(to_cells(a, level.n())), hi_(to_cells(b, level.n())) {
    if (t_index < 0 || t_index > level.n()) throw std::invalid_argument("event time index outside [0, n]");
    if (!(a <= b)) throw std::invalid_argument("event interval must satisfy a <= b");
  }
  void consume(const NoisePath&, const Trajectory& tr) {
    const double c = cell_coordinate(tr.values[static_cast<std::size_t>(k_)], n_);
    if (c >= lo_ && c < hi_) ++hits_;
    ++total_;
  }
  void merge(const EventCounter& o) {
    hits_ += o.hits_;
    total_ += o.total_;
  }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t total() const { return total_; }
  Rational probability() const { return Rational::reduced(hits_, total_); }

 private:
  static double to_cells(double v, int n) {
    if (std::isinf(v)) return v;
    std::int64_t k = 0;
    if (snap_to_lattice(v, n, k)) return static_cast<double>(k);
    return v * n;
  }
  int n_;
  int k_;
  double lo_, hi_;
  std::uint64_t hits_ = 0;
  std::uint64_t total_ = 0;
};

template <class Ensemble>
Rational event_probability(const CauchyProblem& p, const Ensemble& ens, double t, double a, double b,
                           const ParallelOptions& opts = {}) {
  const int k = time_indices(p.level(), std::span<const double>(&t, 1)).front();
  auto acc = simulate_ensemble(p, ens, [&] { return EventCounter(p.level(), k, a, b); }, opts);
  return acc.probability();
}

// ---------------------------------------------------------------------------
// Continuous dependence on initial data under a Lipschitz drift.

struct DependenceReport {
  double initial_gap = 0;
  double max_gap = 0;
  double bound = 0;            ///< |x0 - x1| e^{L T1}
  double discrete_factor = 0;  ///< (1 + L/n)^{n T1} <= e^{L T1}
  std::vector<double> gaps;    ///< |x(t_k, x0) - x(t_k, x1)| for t_k <= T1
  std::optional<int> first_violation;
  bool holds() const { return !first_violation.has_value(); }
};

/// Checks |x(t, x0) - x(t, x1)| <= |x0 - x1| e^{L t} at every grid point up to
/// T1 for the deterministic grid ODE. A violation means L is not a valid
/// Lipschitz constant on the visited region.
inline DependenceReport continuous_dependence_check(const CauchyProblem& p, double x0, double x1, double lipschitz,
                                                    double t1) {
  if (lipschitz < 0) throw std::invalid_argument("Lipschitz constant must be non-negative");
  const Trajectory a = solve_grid_ode(p.with_x0(x0));
  const Trajectory b = solve_grid_ode(p.with_x0(x1));
  const int n = p.level().n();
  DependenceReport r;
  r.initial_gap = std::abs(x0 - x1);
  r.bound = r.initial_gap * std::exp(lipschitz * t1);
  r.discrete_factor = std::pow(1.0 + lipschitz / n, std::floor(n * t1 + 1e-9));
  for (int k = 0; k <= n && k <= n * t1 + 1e-9; ++k) {
    const double gap = std::abs(a.values[static_cast<std::size_t>(k)] - b.values[static_cast<std::size_t>(k)]);
    r.gaps.push_back(gap);
    r.max_gap = std::max(r.max_gap, gap);
    const double allowed = r.initial_gap * std::exp(lipschitz * k / static_cast<double>(n));
    if (gap > allowed * (1 + 1e-12) + 1e-300 && !r.first_violation) r.first_violation = k;
  }
  return r;
}

}  // namespace hgrid
