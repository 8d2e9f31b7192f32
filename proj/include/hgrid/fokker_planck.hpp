#pragma once

// Verification core: residual of the discrete Ito chain rule along a path,
// the weak-form Fokker-Planck residual of an ensemble density and an
// independent finite-volume Fokker-Planck solver used for cross-validation.
//
// The weak form uses
//   eps^2 sum_{t in [0,1)} sum_x (phi_t + f phi_x + 1/2 h^2 phi_xx) rho + phi(0, x0),
// i.e. with the 1/2 on the diffusion term, consistent with
//   dP/dt = -d/dx (f P) + 1/2 d^2/dx^2 (h^2 P).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgrid/expr.hpp"
#include "hgrid/grid.hpp"
#include "hgrid/noise.hpp"
#include "hgrid/sde.hpp"
#include "hgrid/summation.hpp"
#include "hgrid/test_function.hpp"

namespace hgrid {

class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Ito residual

struct ItoReport {
  std::vector<double> residuals;  ///< r(t_k), k = 0..n-1
  double max_abs = 0;
  double mean_abs = 0;
  double max_speed = 0;       ///< max |dx/dt|
  double speed_bound = 0;     ///< n^{2/3}
  bool hypothesis_violated = false;
};

/// r(t) = d/dt phi(t, x(t)) - [phi_t + phi_x dx/dt + (eps/2) phi_xx (dx/dt)^2]
/// with grid derivatives, at every step of the trajectory.
inline ItoReport ito_residual(const TestFunction& phi, std::span<const double> x, int n) {
  if (x.size() != static_cast<std::size_t>(n) + 1) throw VerificationError("trajectory length does not match level");
  ItoReport r;
  const double dn = n;
  const double eps = 1.0 / dn;
  r.residuals.resize(static_cast<std::size_t>(n));
  CompensatedSum abs_sum;
  for (int k = 0; k < n; ++k) {
    const double t = k / dn;
    const double t1 = (k + 1) / dn;
    const double xk = x[static_cast<std::size_t>(k)];
    const double xk1 = x[static_cast<std::size_t>(k) + 1];
    const double v = (xk1 - xk) * dn;
    const double lhs = (phi(t1, xk1) - phi(t, xk)) * dn;
    const double rhs = phi.d_t(t, xk) + phi.d_x(t, xk) * v + 0.5 * eps * phi.d_xx(t, xk) * v * v;
    const double res = lhs - rhs;
    r.residuals[static_cast<std::size_t>(k)] = res;
    r.max_abs = std::max(r.max_abs, std::abs(res));
    abs_sum.add(std::abs(res));
    r.max_speed = std::max(r.max_speed, std::abs(v));
  }
  r.mean_abs = n > 0 ? abs_sum.value() / n : 0.0;
  r.speed_bound = std::pow(dn, 2.0 / 3.0);
  r.hypothesis_violated = r.max_speed > r.speed_bound;
  return r;
}

inline ItoReport ito_residual(const TestFunction& phi, const Trajectory& tr, const CauchyProblem& p) {
  return ito_residual(phi, tr.values, p.level().n());
}

// ---------------------------------------------------------------------------
// Weak-form residual

struct WeakFormReport {
  int n = 0;
  std::uint64_t paths = 0;
  bool exhaustive = false;

  double residual = 0;        ///< density route, including phi(0, x0)
  double density_sum = 0;     ///< eps^2 sum sum (phi_t + f phi_x + 1/2 h^2 phi_xx) rho
  double std_error = 0;       ///< sampling standard error of density_sum; 0 when exhaustive
  double initial_term = 0;    ///< phi(0, x0)

  // eps sum_t E[...] of the pieces of the expanded Ito increment
  double drift_term = 0;      ///< phi_t + f phi_x
  double noise_term = 0;      ///< (phi_x h + eps phi_xx f h) xi
  double eps_correction = 0;  ///< (eps/2) phi_xx f^2
  double quadratic_term = 0;  ///< (eps/2) phi_xx h^2 xi^2
  double pieces_total = 0;    ///< sum of the four pieces
  double expansion_total = 0; ///< eps sum_t E[phi_t + phi_x v + (eps/2) phi_xx v^2], v = dx/dt
  double noise_scale = 0;     ///< eps sum_t E[|(phi_x h + eps phi_xx f h) xi|]
  double telescoped = 0;      ///< E[phi(1, x(1))] - phi(0, x0)
};

namespace detail {

class WeakFormAccumulator {
 public:
  WeakFormAccumulator(const CauchyProblem* p, const TestFunction* phi)
      : p_(p), phi_(phi), density_(p->level(), slices(p->level())) {}

  void consume(const NoisePath& xi, const Trajectory& tr) {
    density_.consume(xi, tr);
    const int n = p_->level().n();
    const double dn = n;
    const double eps = 1.0 / dn;
    CompensatedSum drift, noise, corr, quad, expansion, noise_abs, binned;
    for (int k = 0; k < n; ++k) {
      const double t = k / dn;
      const double x = tr.values[static_cast<std::size_t>(k)];
      const std::size_t b = density_.bin_of(x);
      if (b != density_.bins()) {
        const double xb = density_.bin_left_edge(b);
        binned.add(phi_->d_t(t, xb) + p_->f(t, xb) * phi_->d_x(t, xb) +
                   0.5 * p_->h(t, xb) * p_->h(t, xb) * phi_->d_xx(t, xb));
      }
      const double v = (tr.values[static_cast<std::size_t>(k) + 1] - x) * dn;
      const double pt = phi_->d_t(t, x);
      const double px = phi_->d_x(t, x);
      const double pxx = phi_->d_xx(t, x);
      if (pt == 0.0 && px == 0.0 && pxx == 0.0) continue;
      const double f = p_->f(t, x);
      const double h = p_->h(t, x);
      const double w = xi.values[static_cast<std::size_t>(k)];
      drift.add(pt + f * px);
      const double nz = (px * h + eps * pxx * f * h) * w;
      noise.add(nz);
      noise_abs.add(std::abs(nz));
      corr.add(0.5 * eps * pxx * f * f);
      quad.add(0.5 * eps * pxx * h * h * w * w);
      expansion.add(pt + px * v + 0.5 * eps * pxx * v * v);
    }
    drift_.add(drift.value() * eps);
    noise_.add(noise.value() * eps);
    corr_.add(corr.value() * eps);
    quad_.add(quad.value() * eps);
    expansion_.add(expansion.value() * eps);
    noise_abs_.add(noise_abs.value() * eps);
    final_.add((*phi_)(1.0, tr.values.back()));
    const double g = binned.value() * eps;
    binned_sq_.add(g * g);
    binned_.add(g);
  }

  void merge(const WeakFormAccumulator& o) {
    density_.merge(o.density_);
    drift_.merge(o.drift_);
    noise_.merge(o.noise_);
    corr_.merge(o.corr_);
    quad_.merge(o.quad_);
    expansion_.merge(o.expansion_);
    noise_abs_.merge(o.noise_abs_);
    final_.merge(o.final_);
    binned_.merge(o.binned_);
    binned_sq_.merge(o.binned_sq_);
  }

  WeakFormReport report(bool exhaustive) const {
    WeakFormReport r;
    const int n = p_->level().n();
    const double dn = n;
    const double m = static_cast<double>(density_.total());
    r.n = n;
    r.paths = density_.total();
    r.exhaustive = exhaustive;
    r.initial_term = (*phi_)(0.0, p_->x0());

    CompensatedSum dens;
    for (int k = 0; k < n; ++k) {
      const double t = k / dn;
      for (std::size_t b = 0; b < density_.bins(); ++b) {
        if (density_.count(static_cast<std::size_t>(k), b) == 0) continue;
        const double x = density_.bin_left_edge(b);
        const double pt = phi_->d_t(t, x);
        const double px = phi_->d_x(t, x);
        const double pxx = phi_->d_xx(t, x);
        if (pt == 0.0 && px == 0.0 && pxx == 0.0) continue;
        const double f = p_->f(t, x);
        const double h = p_->h(t, x);
        dens.add((pt + f * px + 0.5 * h * h * pxx) * density_.rho(static_cast<std::size_t>(k), b));
      }
    }
    r.density_sum = dens.value() / (dn * dn);
    r.residual = r.density_sum + r.initial_term;
    if (!exhaustive && m > 1) {
      // per-path values g average to density_sum; their sample variance gives the error
      const double mean = binned_.value() / m;
      const double var = std::max(0.0, (binned_sq_.value() / m - mean * mean) * m / (m - 1));
      r.std_error = std::sqrt(var / m);
    }

    r.drift_term = drift_.value() / m;
    r.noise_term = noise_.value() / m;
    r.eps_correction = corr_.value() / m;
    r.quadratic_term = quad_.value() / m;
    r.pieces_total = r.drift_term + r.noise_term + r.eps_correction + r.quadratic_term;
    r.expansion_total = expansion_.value() / m;
    r.noise_scale = noise_abs_.value() / m;
    r.telescoped = final_.value() / m - r.initial_term;
    return r;
  }

 private:
  static std::vector<int> slices(const GridLevel& level) {
    std::vector<int> v(static_cast<std::size_t>(level.n()));
    for (int k = 0; k < level.n(); ++k) v[static_cast<std::size_t>(k)] = k;
    return v;
  }

  const CauchyProblem* p_;
  const TestFunction* phi_;
  DensityField density_;
  CompensatedSum drift_, noise_, corr_, quad_, expansion_, noise_abs_, final_, binned_, binned_sq_;
};

}  // namespace detail

/// Weak-form Fokker-Planck residual of the ensemble density, with the
/// expectation-route decomposition of the expanded Ito increment.
template <class Ensemble>
WeakFormReport weak_form_residual(const CauchyProblem& p, const Ensemble& ens, const TestFunction& phi,
                                  const ParallelOptions& opts = {}) {
  const Support& s = phi.support();
  if (!(s.t_hi <= 1.0)) {
    throw VerificationError("test function support must vanish at t = 1 (support reaches t = " +
                            format_number(s.t_hi) + ")");
  }
  const double w = p.level().spatial_halfwidth();
  if (!s.x_bounded() || s.x_lo < -w || s.x_hi > w) {
    throw VerificationError("window too small for test function support");
  }
  auto acc = simulate_ensemble(p, ens, [&] { return detail::WeakFormAccumulator(&p, &phi); }, opts);
  return acc.report(ens.exhaustive());
}

// ---------------------------------------------------------------------------
// Finite-volume Fokker-Planck solver

struct FPParams {
  double halfwidth = 8.0;         ///< cells cover [-(K+1/2) dx, (K+1/2) dx)
  double dx = 1.0 / 64;
  double dt = 0.0;                ///< 0 selects 0.9 of the admissible step
  double t_end = 1.0;
  std::vector<double> save_times; ///< defaults to {t_end}
};

struct FPSolution {
  double dx = 0;
  double dt = 0;                  ///< largest step actually taken
  std::int64_t half_cells = 0;    ///< K; cell i in [-K, K] is centered at i dx
  std::vector<double> times;
  std::vector<std::vector<double>> density;  ///< P per saved time, per cell
  std::vector<double> mass;                  ///< sum P dx per saved time
  double min_value = 0;                      ///< smallest P seen at any step
  double max_mass_error = 0;                 ///< max |sum P dx - 1| over all steps

  std::size_t cells() const { return static_cast<std::size_t>(2 * half_cells + 1); }
  double center(std::size_t i) const { return (static_cast<double>(i) - static_cast<double>(half_cells)) * dx; }
  double left_edge(std::size_t i) const { return center(i) - 0.5 * dx; }
  double mean(std::size_t s) const {
    CompensatedSum m;
    for (std::size_t i = 0; i < cells(); ++i) m.add(center(i) * density[s][i] * dx);
    return m.value();
  }
  double variance(std::size_t s) const {
    const double mu = mean(s);
    CompensatedSum v;
    for (std::size_t i = 0; i < cells(); ++i) v.add((center(i) - mu) * (center(i) - mu) * density[s][i] * dx);
    return v.value();
  }
};

/// Largest dt keeping the explicit scheme positive:
/// dx^2 / (2 max h^2 + 2 dx max|f|).
inline double fp_admissible_dt(const CompiledExpr& f, const CompiledExpr& h, double halfwidth, double dx, double t_end) {
  const auto k = static_cast<std::int64_t>(std::llround(halfwidth / dx));
  double max_h2 = 0, max_f = 0;
  const int tsamples = 64;
  for (int it = 0; it <= tsamples; ++it) {
    const double t = t_end * it / tsamples;
    for (std::int64_t i = -2 * k - 1; i <= 2 * k + 1; ++i) {
      const double x = 0.5 * static_cast<double>(i) * dx;
      const double hv = h(t, x);
      max_h2 = std::max(max_h2, hv * hv);
      max_f = std::max(max_f, std::abs(f(t, x)));
    }
  }
  const double denom = 2 * max_h2 + 2 * dx * max_f;
  return denom > 0 ? dx * dx / denom : std::numeric_limits<double>::infinity();
}

/// Conservative explicit update: upwind drift flux, central diffusion flux of
/// h^2 P, zero flux at the outer boundaries, discrete delta initial data.
inline FPSolution fp_solve(const Expr& drift, const Expr& diffusion, double x0, const FPParams& prm) {
  if (!(prm.dx > 0) || !(prm.halfwidth > 0) || !(prm.t_end >= 0)) {
    throw VerificationError("fp_solve needs dx > 0, halfwidth > 0 and t_end >= 0");
  }
  const CompiledExpr f(drift);
  const CompiledExpr h(diffusion);
  FPSolution sol;
  sol.dx = prm.dx;
  sol.half_cells = static_cast<std::int64_t>(std::llround(prm.halfwidth / prm.dx));
  const double dx = prm.dx;
  const std::int64_t kcells = sol.half_cells;
  if (!(std::abs(x0) < (static_cast<double>(kcells) + 0.5) * dx)) {
    throw VerificationError("fp_solve window does not contain x0");
  }

  const double dt_max = fp_admissible_dt(f, h, prm.halfwidth, dx, prm.t_end);
  double dt_target = prm.dt;
  if (dt_target > 0) {
    if (dt_target > dt_max) {
      throw VerificationError("explicit stability violated: dt = " + format_number(dt_target) +
                              " exceeds the maximal admissible dt = " + format_number(dt_max));
    }
  } else {
    dt_target = std::isfinite(dt_max) ? 0.9 * dt_max : std::max(prm.t_end, 1e-3);
  }

  std::vector<double> times = prm.save_times.empty() ? std::vector<double>{prm.t_end} : prm.save_times;
  std::sort(times.begin(), times.end());
  for (double t : times) {
    if (t < 0 || t > prm.t_end + 1e-12) throw VerificationError("fp_solve save time outside [0, t_end]");
  }

  const std::size_t ncell = sol.cells();
  std::vector<double> P(ncell, 0.0), next(ncell, 0.0), flux(ncell + 1, 0.0), d(ncell, 0.0);
  const auto i0 = static_cast<std::size_t>(std::floor(x0 / dx + 0.5) + static_cast<double>(kcells));
  P[i0] = 1.0 / dx;
  sol.min_value = 0.0;

  auto mass_of = [&](const std::vector<double>& v) {
    CompensatedSum m;
    for (double p : v) m.add(p);
    return m.value() * dx;
  };

  double t = 0.0;
  auto step = [&](double dt) {
    for (std::size_t i = 0; i < ncell; ++i) {
      const double hv = h(t, sol.center(i));
      d[i] = hv * hv;
    }
    flux[0] = 0.0;
    flux[ncell] = 0.0;
    for (std::size_t i = 0; i + 1 < ncell; ++i) {
      const double xf = sol.center(i) + 0.5 * dx;
      const double a = f(t, xf);
      const double adv = a > 0 ? a * P[i] : a * P[i + 1];
      const double diff = -0.5 * (d[i + 1] * P[i + 1] - d[i] * P[i]) / dx;
      flux[i + 1] = adv + diff;
    }
    for (std::size_t i = 0; i < ncell; ++i) {
      next[i] = P[i] - dt / dx * (flux[i + 1] - flux[i]);
      sol.min_value = std::min(sol.min_value, next[i]);
    }
    P.swap(next);
    t += dt;
    sol.max_mass_error = std::max(sol.max_mass_error, std::abs(mass_of(P) - 1.0));
  };

  double reached = 0.0;
  for (double target : times) {
    const double span = target - reached;
    if (span > 0) {
      const auto steps = static_cast<std::int64_t>(std::ceil(span / dt_target - 1e-9));
      const double dt = span / static_cast<double>(steps);
      sol.dt = std::max(sol.dt, dt);
      for (std::int64_t s = 0; s < steps; ++s) step(dt);
      t = target;
      reached = target;
    }
    sol.times.push_back(target);
    sol.density.push_back(P);
    sol.mass.push_back(mass_of(P));
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Cross-validation of the ensemble density against the finite-volume solver

struct CrossValidationReport {
  std::vector<double> times;
  std::vector<double> l1;  ///< sum |rho - P| dx + ensemble mass outside the FP cells
  double max_l1 = 0;
};

/// Rebins rho onto the FP cells; each FP cell must be a union of density
/// bins, which requires dx * n to be an even integer.
inline CrossValidationReport compare_densities(const DensityField& rho, const FPSolution& fp) {
  const int n = rho.level().n();
  std::int64_t m = 0;
  if (!snap_to_lattice(fp.dx, n, m) || m < 2 || m % 2 != 0) {
    throw VerificationError("incompatible bin alignment: FP cell width " + format_number(fp.dx) +
                            " must be an even multiple of 1/" + std::to_string(n));
  }
  if (fp.times.size() != rho.slices().size()) throw VerificationError("density and FP solution have different slices");
  CrossValidationReport r;
  for (std::size_t s = 0; s < fp.times.size(); ++s) {
    std::vector<std::uint64_t> cell_counts(fp.cells(), 0);
    std::uint64_t outside = rho.overflow(s);
    for (std::size_t b = 0; b < rho.bins(); ++b) {
      const std::uint64_t c = rho.count(s, b);
      if (c == 0) continue;
      // bin j = b - W covers [j/n, (j+1)/n); cell i covers [(i - 1/2) m, (i + 1/2) m) in bin units
      const std::int64_t j = static_cast<std::int64_t>(b) - rho.level().window_cells();
      const std::int64_t i = static_cast<std::int64_t>(std::floor((static_cast<double>(j) + m / 2.0) / m));
      const std::int64_t idx = i + fp.half_cells;
      if (idx < 0 || idx >= static_cast<std::int64_t>(fp.cells())) {
        outside += c;
      } else {
        cell_counts[static_cast<std::size_t>(idx)] += c;
      }
    }
    const double total = static_cast<double>(rho.total());
    CompensatedSum l1;
    for (std::size_t i = 0; i < fp.cells(); ++i) {
      const double emp = static_cast<double>(cell_counts[i]) / (total * fp.dx);
      l1.add(std::abs(emp - fp.density[s][i]) * fp.dx);
    }
    l1.add(static_cast<double>(outside) / total);
    r.times.push_back(fp.times[s]);
    r.l1.push_back(l1.value());
    r.max_l1 = std::max(r.max_l1, l1.value());
  }
  return r;
}

/// Simulates the ensemble density at `times` and compares it with the
/// finite-volume solution of the same problem.
template <class Ensemble>
CrossValidationReport cross_validate(const CauchyProblem& p, const Ensemble& ens, FPParams fp_params,
                                     const std::vector<double>& times, const ParallelOptions& opts = {}) {
  std::int64_t m = 0;
  if (!snap_to_lattice(fp_params.dx, p.level().n(), m) || m < 2 || m % 2 != 0) {
    throw VerificationError("incompatible bin alignment: FP cell width " + format_number(fp_params.dx) +
                            " must be an even multiple of 1/" + std::to_string(p.level().n()));
  }
  const std::vector<int> slices = time_indices(p.level(), times);
  std::vector<double> exact_times;
  for (int k : slices) exact_times.push_back(p.level().coordinate(k));
  fp_params.save_times = exact_times;
  fp_params.t_end = exact_times.empty() ? 0.0 : *std::max_element(exact_times.begin(), exact_times.end());
  const FPSolution fp = fp_solve(p.drift(), p.diffusion(), p.x0(), fp_params);
  std::vector<int> sorted = slices;
  std::sort(sorted.begin(), sorted.end());
  const DensityField rho = density(p, ens, sorted, opts);
  return compare_densities(rho, fp);
}

}  // namespace hgrid
