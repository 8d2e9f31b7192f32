#pragma once

// Noise alphabets and ensembles. A noise path assigns symbol * sqrt(n) to
// each of the n+1 points of the time grid [0,1]_H, so the exhaustive white
// noise ensemble has 2^(n+1) members. The Euler recursion consumes only
// indices 0..n-1; the last point participates in counting only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgrid/grid.hpp"
#include "hgrid/summation.hpp"

namespace hgrid {

class NoiseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symbols q_1 < ... < q_k with uniform single-point mean 0 and mean square
/// exactly 1, so that a path value q * sqrt(n) has mean 0 and mean square n.
class NoiseAlphabet {
 public:
  static NoiseAlphabet binary() { return NoiseAlphabet({-1.0, 1.0}); }

  /// Accepts any zero-sum symbol set and rescales it to unit mean square.
  static NoiseAlphabet normalized(std::vector<double> q) {
    if (q.size() < 2) throw NoiseError("noise alphabet needs at least two symbols");
    double sum = 0, sum_abs = 0, sum_sq = 0;
    for (double v : q) {
      if (!std::isfinite(v)) throw NoiseError("noise alphabet symbols must be finite");
      sum += v;
      sum_abs += std::abs(v);
      sum_sq += v * v;
    }
    if (std::abs(sum) > 1e-12 * std::max(1.0, sum_abs)) throw NoiseError("noise alphabet symbols must sum to 0");
    if (sum_sq == 0) throw NoiseError("noise alphabet symbols must not all be 0");
    const double scale = std::sqrt(static_cast<double>(q.size()) / sum_sq);
    for (double& v : q) v *= scale;
    return NoiseAlphabet(std::move(q));
  }

  std::size_t size() const { return symbols_.size(); }
  std::span<const double> symbols() const { return symbols_; }
  double symbol(std::size_t i) const { return symbols_[i]; }

  bool symmetric() const {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (symbols_[i] != -symbols_[symbols_.size() - 1 - i]) return false;
    }
    return true;
  }

  friend bool operator==(const NoiseAlphabet&, const NoiseAlphabet&) = default;

 private:
  explicit NoiseAlphabet(std::vector<double> q) : symbols_(std::move(q)) {
    std::sort(symbols_.begin(), symbols_.end());
  }
  std::vector<double> symbols_;
};

struct NoisePath {
  int n = 0;
  std::vector<double> values;  ///< xi(t_k), k = 0..n
};

/// Stateless counter-based generator: every draw is a pure function of
/// (seed, path, step).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (path * 0xD1B54A32D192ED03ull));
  h = splitmix64(h ^ (step * 0x8CB92BA72F3D8DD7ull));
  return h;
}

inline std::size_t uniform_index(std::uint64_t h, std::size_t k) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(h) * k) >> 64);
}

enum class EnsembleMode { Exhaustive, Sampled };

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

/// |alphabet|^(n+1), or nullopt-like max() on overflow past `cap`.
inline std::uint64_t exhaustive_count(std::size_t k, int n, std::uint64_t cap, bool& within_cap) {
  std::uint64_t c = 1;
  within_cap = true;
  for (int i = 0; i <= n; ++i) {
    if (c > cap / k) {
      within_cap = false;
      return std::numeric_limits<std::uint64_t>::max();
    }
    c *= k;
  }
  within_cap = c <= cap;
  return c;
}

class NoiseEnsemble {
 public:
  EnsembleMode mode() const { return mode_; }
  bool exhaustive() const { return mode_ == EnsembleMode::Exhaustive; }
  const GridLevel& level() const { return level_; }
  const NoiseAlphabet& alphabet() const { return alphabet_; }
  std::uint64_t size() const { return count_; }
  std::uint64_t seed() const { return seed_; }

  /// Symbol index of path `i` at time index `k`.
  std::size_t symbol_index(std::uint64_t i, int k) const {
    const std::size_t a = alphabet_.size();
    if (mode_ == EnsembleMode::Sampled) return uniform_index(counter_hash(seed_, i, static_cast<std::uint64_t>(k)), a);
    // lexicographic order: time 0 is the most significant digit
    return static_cast<std::size_t>((i / place_[static_cast<std::size_t>(k)]) % a);
  }

  void fill(std::uint64_t i, NoisePath& out) const {
    const int n = level_.n();
    const double scale = std::sqrt(static_cast<double>(n));
    out.n = n;
    out.values.resize(static_cast<std::size_t>(n) + 1);
    if (mode_ == EnsembleMode::Exhaustive) {
      std::uint64_t rest = i;
      for (int k = n; k >= 0; --k) {
        out.values[static_cast<std::size_t>(k)] = alphabet_.symbol(rest % alphabet_.size()) * scale;
        rest /= alphabet_.size();
      }
    } else {
      for (int k = 0; k <= n; ++k) out.values[static_cast<std::size_t>(k)] = alphabet_.symbol(symbol_index(i, k)) * scale;
    }
  }

  NoisePath path(std::uint64_t i) const {
    NoisePath p;
    fill(i, p);
    return p;
  }

  friend NoiseEnsemble enumerate(const GridLevel&, const NoiseAlphabet&, std::uint64_t);
  friend NoiseEnsemble sample(const GridLevel&, const NoiseAlphabet&, std::uint64_t, std::uint64_t);

 private:
  NoiseEnsemble(EnsembleMode mode, GridLevel level, NoiseAlphabet alphabet, std::uint64_t count, std::uint64_t seed)
      : mode_(mode), level_(level), alphabet_(std::move(alphabet)), count_(count), seed_(seed) {
    if (mode_ == EnsembleMode::Exhaustive) {
      place_.assign(static_cast<std::size_t>(level_.n()) + 1, 1);
      for (int k = level_.n() - 1; k >= 0; --k) {
        place_[static_cast<std::size_t>(k)] = place_[static_cast<std::size_t>(k) + 1] * alphabet_.size();
      }
    }
  }

  EnsembleMode mode_;
  GridLevel level_;
  NoiseAlphabet alphabet_;
  std::uint64_t count_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> place_;
};

/// Every path of {q_i sqrt(n)}^[0,1]_H exactly once, in lexicographic order.
inline NoiseEnsemble enumerate(const GridLevel& level, const NoiseAlphabet& alphabet,
                               std::uint64_t cap = kDefaultEnumerationCap) {
  bool ok = false;
  const std::uint64_t c = exhaustive_count(alphabet.size(), level.n(), cap, ok);
  if (!ok) {
    throw NoiseError("exhaustive enumeration at n = " + std::to_string(level.n()) + " exceeds the cap of " +
                     std::to_string(cap) + " paths; use sampled mode");
  }
  return NoiseEnsemble(EnsembleMode::Exhaustive, level, alphabet, c, 0);
}

/// M paths drawn uniformly per grid point; path i depends only on (seed, i).
inline NoiseEnsemble sample(const GridLevel& level, const NoiseAlphabet& alphabet, std::uint64_t m,
                            std::uint64_t seed) {
  if (m < 1) throw NoiseError("sampled ensemble needs at least one path");
  return NoiseEnsemble(EnsembleMode::Sampled, level, alphabet, m, seed);
}

/// Members of an exhaustive ensemble agreeing with a fixed prefix on [0, s).
class ConditionalEnsemble {
 public:
  ConditionalEnsemble(const NoiseEnsemble& base, std::vector<std::size_t> prefix_symbols)
      : base_(base), prefix_(std::move(prefix_symbols)) {
    if (!base_.exhaustive()) {
      throw NoiseError("conditioning is only supported on exhaustive ensembles (a sampled prefix has measure zero)");
    }
    if (prefix_.size() > static_cast<std::size_t>(base_.level().n())) {
      throw NoiseError("conditioning prefix must cover [0, s) with s <= 1");
    }
    const std::size_t k = base_.alphabet().size();
    for (std::size_t s : prefix_) {
      if (s >= k) throw NoiseError("prefix symbol index outside alphabet");
    }
    suffix_len_ = static_cast<std::size_t>(base_.level().n()) + 1 - prefix_.size();
    count_ = 1;
    for (std::size_t i = 0; i < suffix_len_; ++i) count_ *= k;
    std::uint64_t head = 0;
    for (std::size_t s : prefix_) head = head * k + s;
    offset_ = head * count_;
  }

  const GridLevel& level() const { return base_.level(); }
  const NoiseEnsemble& base() const { return base_; }
  bool exhaustive() const { return true; }
  std::uint64_t size() const { return count_; }
  std::size_t prefix_length() const { return prefix_.size(); }
  std::span<const std::size_t> prefix() const { return prefix_; }
  /// Index of member j within the base ensemble.
  std::uint64_t global_index(std::uint64_t j) const { return offset_ + j; }

  void fill(std::uint64_t j, NoisePath& out) const { base_.fill(global_index(j), out); }
  NoisePath path(std::uint64_t j) const { return base_.path(global_index(j)); }

 private:
  NoiseEnsemble base_;
  std::vector<std::size_t> prefix_;
  std::size_t suffix_len_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t offset_ = 0;
};

/// Conditions on the prefix values xi(t_0), ..., xi(t_{s n - 1}).
inline ConditionalEnsemble conditional(const NoiseEnsemble& ens, std::span<const double> prefix_values) {
  if (!ens.exhaustive()) {
    throw NoiseError("conditioning is only supported on exhaustive ensembles (a sampled prefix has measure zero)");
  }
  const double scale = std::sqrt(static_cast<double>(ens.level().n()));
  std::vector<std::size_t> idx;
  idx.reserve(prefix_values.size());
  for (std::size_t k = 0; k < prefix_values.size(); ++k) {
    std::size_t found = ens.alphabet().size();
    for (std::size_t a = 0; a < ens.alphabet().size(); ++a) {
      if (std::abs(ens.alphabet().symbol(a) * scale - prefix_values[k]) <= 1e-9 * std::max(1.0, scale)) found = a;
    }
    if (found == ens.alphabet().size()) {
      throw NoiseError("prefix value at index " + std::to_string(k) + " is not in the scaled alphabet");
    }
    idx.push_back(found);
  }
  return ConditionalEnsemble(ens, std::move(idx));
}

/// Number of distinct prefixes of length `len`, |alphabet|^len.
inline std::uint64_t prefix_count(const NoiseEnsemble& ens, std::size_t len) {
  std::uint64_t c = 1;
  for (std::size_t i = 0; i < len; ++i) c *= ens.alphabet().size();
  return c;
}

/// The `index`-th prefix of length `len` in lexicographic order, as values.
inline std::vector<double> prefix_values(const NoiseEnsemble& ens, std::size_t len, std::uint64_t index) {
  const std::size_t k = ens.alphabet().size();
  const double scale = std::sqrt(static_cast<double>(ens.level().n()));
  std::vector<double> v(len);
  for (std::size_t i = len; i-- > 0;) {
    v[i] = ens.alphabet().symbol(index % k) * scale;
    index /= k;
  }
  return v;
}

struct Expectation {
  double mean = 0;
  double std_error = 0;  ///< 0 for exhaustive ensembles
  std::uint64_t count = 0;
};

namespace detail {
struct MomentPartial {
  CompensatedSum sum;
  CompensatedSum sum_sq;
  std::uint64_t count = 0;
};
}  // namespace detail

/// Uniform average of a path functional. Exhaustive ensembles give the
/// exact mean; sampled ensembles add the standard error of the mean.
template <class Ensemble, class Functional>
Expectation expectation(const Ensemble& ens, Functional&& phi, const ParallelOptions& opts = {}) {
  auto blocks = run_blocks<detail::MomentPartial>(ens.size(), opts, [&](std::uint64_t b, std::uint64_t e) {
    detail::MomentPartial p;
    NoisePath path;
    for (std::uint64_t i = b; i < e; ++i) {
      ens.fill(i, path);
      const double v = phi(path);
      if (!std::isfinite(v)) throw NoiseError("functional is not finite on path " + std::to_string(i));
      p.sum.add(v);
      p.sum_sq.add(v * v);
      ++p.count;
    }
    return p;
  });
  detail::MomentPartial total;
  for (const auto& p : blocks) {
    total.sum.merge(p.sum);
    total.sum_sq.merge(p.sum_sq);
    total.count += p.count;
  }
  Expectation r;
  r.count = total.count;
  if (r.count == 0) return r;
  const double m = static_cast<double>(r.count);
  r.mean = total.sum.value() / m;
  if (!ens.exhaustive() && r.count > 1) {
    const double var = std::max(0.0, (total.sum_sq.value() - m * r.mean * r.mean) / (m - 1));
    r.std_error = std::sqrt(var / m);
  }
  return r;
}

}  // namespace hgrid
