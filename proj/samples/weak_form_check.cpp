// Weak-form residual of the Fokker-Planck equation for a user-supplied
// drift and diffusion, exhaustive at small n and sampled above the cap.
//
//   sample_weak_form "sin(x)-x" "1" 16

#include <cstdio>
#include <cstdlib>
#include <string>

#include "hgrid/hgrid.hpp"

int main(int argc, char** argv) {
  using namespace hgrid;
  const std::string f = argc > 1 ? argv[1] : "0";
  const std::string h = argc > 2 ? argv[2] : "1";
  const int n = argc > 3 ? std::atoi(argv[3]) : 16;
  const CauchyProblem p(parse(f), parse(h), 0.0, GridLevel(n));
  const TestFunction phi = TestFunction::standard();
  const NoiseAlphabet a = NoiseAlphabet::binary();
  const WeakFormReport r = n <= 20 ? weak_form_residual(p, enumerate(p.level(), a), phi)
                                   : weak_form_residual(p, sample(p.level(), a, 100000, 1), phi, {4, 4096});

  std::printf("f = %s, h = %s, n = %d, %llu paths (%s)\n", f.c_str(), h.c_str(), n,
              static_cast<unsigned long long>(r.paths), r.exhaustive ? "exhaustive" : "sampled");
  std::printf("residual        %.6e  (+/- %.2e)\n", r.residual, r.std_error);
  std::printf("drift term      %.6e\n", r.drift_term);
  std::printf("noise term      %.6e\n", r.noise_term);
  std::printf("eps correction  %.6e\n", r.eps_correction);
  std::printf("quadratic term  %.6e\n", r.quadratic_term);
  std::printf("telescoped      %.6e\n", r.telescoped);
}
