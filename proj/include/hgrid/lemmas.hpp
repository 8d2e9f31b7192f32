#pragma once

// Identities that hold exactly on exhaustive ensembles: noise moments,
// E[F xi] = 0 and E[F xi^2] = n E[F] for F evaluated on the state before the
// noise acts, and the tower identity E[G] = E[E[G | xi on [0, s)]].

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hgrid/expr.hpp"
#include "hgrid/noise.hpp"
#include "hgrid/sde.hpp"
#include "hgrid/summation.hpp"

namespace hgrid {

struct IdentityCheck {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  double scale = 0;  ///< magnitude the relative error is measured against
  double relative_error = 0;
  bool pass = false;
};

struct LemmaReport {
  double tolerance = 0;
  std::vector<IdentityCheck> checks;
  bool pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
  const IdentityCheck* worst() const {
    const IdentityCheck* w = nullptr;
    for (const auto& c : checks) {
      if (!w || c.relative_error > w->relative_error) w = &c;
    }
    return w;
  }
};

using PathFunctional = std::function<double(const Trajectory&)>;

struct NamedFunctional {
  std::string name;
  PathFunctional g;
};

namespace detail {

inline IdentityCheck make_check(std::string name, double lhs, double rhs, double scale, double tol) {
  IdentityCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.scale = std::max(scale, 1e-300);
  c.relative_error = std::abs(lhs - rhs) / c.scale;
  c.pass = c.relative_error <= tol;
  return c;
}

// Sums over all paths of xi_k, xi_k^2, xi_k xi_j, F xi, F xi^2, F and |F xi|.
class IdentityAccumulator {
 public:
  IdentityAccumulator(int n, const std::vector<CompiledExpr>* fs)
      : n_(n), fs_(fs),
        xi_(n + 1), xi2_(n + 1), cross_((n + 1) * (n + 1)),
        f_xi_(fs->size() * n), f_xi2_(fs->size() * n), f_(fs->size() * n), f_xi_abs_(fs->size() * n) {}

  void consume(const NoisePath& xi, const Trajectory& tr) {
    const auto m = static_cast<std::size_t>(n_) + 1;
    for (std::size_t k = 0; k < m; ++k) {
      xi_[k].add(xi.values[k]);
      xi2_[k].add(xi.values[k] * xi.values[k]);
      for (std::size_t j = k + 1; j < m; ++j) cross_[k * m + j].add(xi.values[k] * xi.values[j]);
    }
    for (std::size_t i = 0; i < fs_->size(); ++i) {
      for (int k = 0; k < n_; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double fv = (*fs_)[i](k / static_cast<double>(n_), tr.values[kk]);
        const double w = xi.values[kk];
        const std::size_t at = i * static_cast<std::size_t>(n_) + kk;
        f_xi_[at].add(fv * w);
        f_xi2_[at].add(fv * w * w);
        f_[at].add(fv);
        f_xi_abs_[at].add(std::abs(fv * w));
      }
    }
    ++count_;
  }

  void merge(const IdentityAccumulator& o) {
    auto m = [](std::vector<CompensatedSum>& a, const std::vector<CompensatedSum>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i].merge(b[i]);
    };
    m(xi_, o.xi_);
    m(xi2_, o.xi2_);
    m(cross_, o.cross_);
    m(f_xi_, o.f_xi_);
    m(f_xi2_, o.f_xi2_);
    m(f_, o.f_);
    m(f_xi_abs_, o.f_xi_abs_);
    count_ += o.count_;
  }

  int n_;
  const std::vector<CompiledExpr>* fs_;
  std::vector<CompensatedSum> xi_, xi2_, cross_, f_xi_, f_xi2_, f_, f_xi_abs_;
  std::uint64_t count_ = 0;
};

}  // namespace detail

/// Runs every identity on an exhaustive ensemble. `state_functions` are
/// F(t, x) evaluated at (t_k, x(t_k)); `path_functionals` feed the tower
/// identity at every prefix length 1..n.
inline LemmaReport lemma_suite(const CauchyProblem& p, const NoiseEnsemble& ens,
                               const std::vector<Expr>& state_functions,
                               const std::vector<NamedFunctional>& path_functionals, double tol = 1e-10,
                               const ParallelOptions& opts = {}) {
  if (!ens.exhaustive()) throw NoiseError("the exact identities need an exhaustive ensemble");
  const int n = p.level().n();
  const double dn = n;
  std::vector<CompiledExpr> fs;
  for (const Expr& e : state_functions) fs.emplace_back(e);

  auto acc = simulate_ensemble(p, ens, [&] { return detail::IdentityAccumulator(n, &fs); }, opts);
  const double m = static_cast<double>(acc.count_);
  LemmaReport r;
  r.tolerance = tol;
  const auto np1 = static_cast<std::size_t>(n) + 1;
  for (std::size_t k = 0; k < np1; ++k) {
    const std::string t = format_number(k / dn);
    r.checks.push_back(detail::make_check("E[xi(" + t + ")] = 0", acc.xi_[k].value() / m, 0.0, std::sqrt(dn), tol));
    r.checks.push_back(detail::make_check("E[xi(" + t + ")^2] = n", acc.xi2_[k].value() / m, dn, dn, tol));
    for (std::size_t j = k + 1; j < np1; ++j) {
      r.checks.push_back(detail::make_check("E[xi(" + t + ") xi(" + format_number(j / dn) + ")] = 0",
                                            acc.cross_[k * np1 + j].value() / m, 0.0, dn, tol));
    }
  }
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::string name = to_string(state_functions[i]);
    for (int k = 0; k < n; ++k) {
      const std::size_t at = i * static_cast<std::size_t>(n) + static_cast<std::size_t>(k);
      const std::string t = format_number(k / dn);
      const double ef = acc.f_[at].value() / m;
      const double scale_xi = acc.f_xi_abs_[at].value() / m;
      r.checks.push_back(detail::make_check("E[F xi(" + t + ")] = 0, F = " + name, acc.f_xi_[at].value() / m, 0.0,
                                            scale_xi, tol));
      r.checks.push_back(detail::make_check("E[F xi(" + t + ")^2] = n E[F], F = " + name,
                                            acc.f_xi2_[at].value() / m, dn * ef,
                                            std::max(std::abs(dn * ef), scale_xi * std::sqrt(dn)), tol));
    }
  }

  for (const NamedFunctional& nf : path_functionals) {
    const Expectation total = trajectory_expectation(
        p, ens, [&](const NoisePath&, const Trajectory& tr) { return nf.g(tr); }, opts);
    for (int len = 1; len <= n; ++len) {
      const std::uint64_t prefixes = prefix_count(ens, static_cast<std::size_t>(len));
      CompensatedSum tower, magnitude;
      for (std::uint64_t q = 0; q < prefixes; ++q) {
        const ConditionalEnsemble c = conditional(ens, prefix_values(ens, static_cast<std::size_t>(len), q));
        const Expectation e = trajectory_expectation(
            p, c, [&](const NoisePath&, const Trajectory& tr) { return nf.g(tr); }, opts);
        tower.add(e.mean);
        magnitude.add(std::abs(e.mean));
      }
      const double avg = tower.value() / static_cast<double>(prefixes);
      const double scale = std::max(std::abs(total.mean), magnitude.value() / static_cast<double>(prefixes));
      r.checks.push_back(detail::make_check(
          "E[E[G | xi on [0," + format_number(len / dn) + ")]] = E[G], G = " + nf.name, avg, total.mean, scale, tol));
    }
  }
  return r;
}

/// Bounded state functions and path functionals used when none are given.
inline std::vector<Expr> default_state_functions() {
  return {parse("cos(x)"), parse("1/(1+x^2)"), parse("sin(3*x)*exp(-t)")};
}

inline std::vector<NamedFunctional> default_path_functionals() {
  return {
      {"x(1)^2", [](const Trajectory& tr) { return tr.values.back() * tr.values.back(); }},
      {"cos(x(1/2)) x(1)",
       [](const Trajectory& tr) { return std::cos(tr.values[(tr.values.size() - 1) / 2]) * tr.values.back(); }},
      {"max_t x(t)",
       [](const Trajectory& tr) { return *std::max_element(tr.values.begin(), tr.values.end()); }},
  };
}

}  // namespace hgrid
