// Exhaustive Brownian walk at a small level: prints the density at t = 1
// next to the binomial weights it should reproduce.

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "hgrid/hgrid.hpp"

int main(int argc, char** argv) {
  using namespace hgrid;
  const int n = argc > 1 ? std::atoi(argv[1]) : 10;
  const CauchyProblem p(parse("0"), parse("1"), 0.0, GridLevel(n));
  const NoiseEnsemble e = enumerate(p.level(), NoiseAlphabet::binary());
  const DensityField d = density(p, e, {n});

  std::printf("level %d, %llu paths\n", n, static_cast<unsigned long long>(e.size()));
  std::printf("%10s %12s %12s\n", "bin", "mass", "binomial");
  double c = 1;
  for (int j = 0; j <= n; ++j) {
    const double x = (2.0 * j - n) / std::sqrt(static_cast<double>(n));
    const std::size_t b = d.bin_of(x);
    std::printf("%10.4f %12.8f %12.8f\n", d.bin_left_edge(b), d.rho(0, b) / n, c / std::pow(2.0, n));
    c = c * (n - j) / (j + 1);
  }
  const auto m = simulate_ensemble(p, e, [&] { return MomentAccumulator(n); });
  std::printf("E[x(1)] = %.3g, E[x(1)^2] = %.15g\n", m.mean(n), m.second_moment(n));
}
