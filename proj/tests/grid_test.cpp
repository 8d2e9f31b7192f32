#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hgrid/grid.hpp"
#include "hgrid/summation.hpp"

namespace hgrid {
namespace {

GridFunction on_time_grid(int n, double (*fn)(double)) { return GridFunction::sample(time_grid(GridLevel(n)), fn); }

TEST(GridLevel, StepTimesLevelIsOne) {
  for (int n : {1, 3, 7, 64, 1000}) {
    GridLevel l(n);
    EXPECT_EQ(l.step() * n, 1.0);
    EXPECT_EQ(l.coordinate(n), 1.0);
  }
}

TEST(GridLevel, DefaultWindowIsCappedAtHalfTheLevel) {
  EXPECT_DOUBLE_EQ(GridLevel(4).spatial_halfwidth(), 2.0);
  EXPECT_DOUBLE_EQ(GridLevel(16).spatial_halfwidth(), 8.0);
  EXPECT_DOUBLE_EQ(GridLevel(128).spatial_halfwidth(), 8.0);
  EXPECT_EQ(GridLevel(16).window_cells(), 128);
}

TEST(GridLevel, RejectsInvalidWindows) {
  EXPECT_THROW(GridLevel(0), GridError);
  EXPECT_THROW(GridLevel(8, 0.3), GridError);   // not a multiple of 1/8
  EXPECT_THROW(GridLevel(8, 4.125), GridError); // exceeds n/2
  EXPECT_THROW(GridLevel(8, -1.0), GridError);
  EXPECT_NO_THROW(GridLevel(8, 4.0));
}

TEST(Lattice, PointsAreIndexOverLevel) {
  const Lattice s = spatial_grid(GridLevel(4, 1.0));
  EXPECT_EQ(s.size, 8u);
  EXPECT_EQ(s.point(0), -1.0);
  EXPECT_EQ(s.point(7), 0.75);
  EXPECT_EQ(s.local(-4), 0u);
  EXPECT_EQ(s.local(4), Lattice::npos);
}

TEST(GridFunction, RejectsNonFiniteValues) {
  const Lattice l = time_grid(GridLevel(2));
  EXPECT_THROW(GridFunction(l, {0.0, NAN, 1.0}), GridError);
  EXPECT_THROW(GridFunction(l, {0.0, 1.0}), GridError);
}

TEST(GridDerivative, ConstantIsZero) {
  const GridFunction d = grid_derivative(on_time_grid(8, [](double) { return 3.5; }));
  EXPECT_EQ(d.size(), 8u);
  for (double v : d.values()) EXPECT_EQ(v, 0.0);
}

TEST(GridDerivative, LinearIsOne) {
  const GridFunction d = grid_derivative(on_time_grid(4, [](double t) { return t; }));
  for (double v : d.values()) EXPECT_EQ(v, 1.0);
}

TEST(GridDerivative, SquareIsTwoTPlusStep) {
  const GridFunction d = grid_derivative(on_time_grid(4, [](double t) { return t * t; }));
  for (std::size_t k = 0; k < d.size(); ++k) EXPECT_EQ(d[k], 2.0 * k / 4.0 + 0.25);
}

TEST(GridDerivative, SinglePointIsUndefined) {
  EXPECT_THROW(grid_derivative(GridFunction(Lattice{4, 0, 1}, {1.0})), GridError);
}

TEST(GridIntegral, HandSums) {
  EXPECT_EQ(grid_integral(on_time_grid(8, [](double) { return 1.0; }), {0, 8}), 1.0);
  EXPECT_EQ(grid_integral(on_time_grid(4, [](double t) { return t; }), {0, 4}), 0.375);
  EXPECT_EQ(grid_integral(on_time_grid(4, [](double t) { return t; }), {2, 2}), 0.0);
  EXPECT_THROW(grid_integral(on_time_grid(4, [](double t) { return t; }), {0, 6}), GridError);
}

TEST(FundamentalTheorem, SquareOverFullRange) {
  const auto s = fundamental_theorem_check(on_time_grid(8, [](double t) { return t * t; }), 0, 8);
  EXPECT_EQ(s.lhs, 1.0);
  EXPECT_EQ(s.rhs, 1.0);
}

TEST(FundamentalTheorem, SingleStepTelescopes) {
  const GridFunction f = on_time_grid(8, [](double t) { return std::sin(7 * t); });
  const auto s = fundamental_theorem_check(f, 3, 4);
  EXPECT_DOUBLE_EQ(s.lhs, f[4] - f[3]);
  EXPECT_DOUBLE_EQ(s.rhs, f[4] - f[3]);
}

TEST(FundamentalTheorem, RandomFunctionsAndSubranges) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 16;
    std::vector<double> v(n + 1);
    for (double& x : v) x = val(rng);
    const GridFunction f(time_grid(GridLevel(n)), v);
    std::uniform_int_distribution<std::size_t> idx(0, n);
    std::size_t a = idx(rng), b = idx(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const auto s = fundamental_theorem_check(f, a, b);
    EXPECT_NEAR(s.lhs, s.rhs, 1e-12 * std::max(1.0, std::abs(s.rhs)));
  }
}

TEST(FundamentalTheorem, DerivativeOfIntegralRecoversFunction) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> val(0.0, 3.0);
  std::vector<double> v(33);
  for (double& x : v) x = val(rng);
  const GridFunction f(time_grid(GridLevel(32)), v);
  for (std::size_t a : {0u, 5u, 20u}) {
    const GridFunction d = grid_derivative(integral_function(f, a));
    ASSERT_EQ(d.size(), f.size() - a);
    for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(d[k], f[a + k], 1e-12 * (1 + std::abs(f[a + k])));
  }
}

TEST(GridCalculus, LinearityToMachinePrecision) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<double> a(65), b(65), c(65);
  const double p = 0.37, q = -2.5;
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = val(rng);
    b[i] = val(rng);
    c[i] = p * a[i] + q * b[i];
  }
  const Lattice l = time_grid(GridLevel(64));
  const GridFunction fa(l, a), fb(l, b), fc(l, c);
  const GridFunction da = grid_derivative(fa), db = grid_derivative(fb), dc = grid_derivative(fc);
  for (std::size_t k = 0; k < dc.size(); ++k) EXPECT_NEAR(dc[k], p * da[k] + q * db[k], 1e-12 * 64);
  EXPECT_NEAR(grid_integral(fc), p * grid_integral(fa) + q * grid_integral(fb), 1e-14);
}

TEST(GridCalculus, ProductRuleDefectIsOrderStep) {
  // defect of the Leibniz rule is eps * f' * g', so defect * n converges
  auto defect = [](int n) {
    const Lattice l = time_grid(GridLevel(n));
    auto f = GridFunction::sample(l, [](double t) { return std::sin(3 * t); });
    auto g = GridFunction::sample(l, [](double t) { return std::exp(t); });
    auto fg = GridFunction::sample(l, [](double t) { return std::sin(3 * t) * std::exp(t); });
    const auto df = grid_derivative(f), dg = grid_derivative(g), dfg = grid_derivative(fg);
    double m = 0;
    for (std::size_t k = 0; k < dfg.size(); ++k) m = std::max(m, std::abs(dfg[k] - (df[k] * g[k] + f[k] * dg[k])));
    return m;
  };
  const double c = defect(64) * 64;
  EXPECT_LE(defect(128) * 128, 1.1 * c);
  EXPECT_LE(defect(256), 1.1 * c / 256);
  // the defect is exactly eps * df * dg
  const Lattice l = time_grid(GridLevel(16));
  auto f = GridFunction::sample(l, [](double t) { return t * t; });
  auto g = GridFunction::sample(l, [](double t) { return 1 - t; });
  auto fg = GridFunction::sample(l, [](double t) { return t * t * (1 - t); });
  const auto df = grid_derivative(f), dg = grid_derivative(g), dfg = grid_derivative(fg);
  for (std::size_t k = 0; k < dfg.size(); ++k) {
    EXPECT_NEAR(dfg[k] - (df[k] * g[k] + f[k] * dg[k]), df[k] * dg[k] / 16, 1e-12);
  }
}

TEST(AlphaIntegral, ConstantIsOneAtEveryLevel) {
  const auto s = alpha_integral([](double) { return 1.0; }, 0.0, 1.0, {8, 16, 32}, 1e-12);
  for (double v : s.values) EXPECT_EQ(v, 1.0);
  EXPECT_TRUE(s.converged);
}

TEST(AlphaIntegral, SquareApproachesOneThird) {
  const auto s = alpha_integral([](double x) { return x * x; }, 0.0, 1.0, {64, 128, 256}, 1e-2);
  EXPECT_NEAR(s.estimate, 1.0 / 3.0, 1e-2);
  EXPECT_TRUE(s.converged);
  // left Riemann sum: 1/3 - 1/(2n) + 1/(6n^2)
  EXPECT_NEAR(s.values[0], 1.0 / 3 - 1.0 / 128 + 1.0 / (6 * 64.0 * 64), 1e-14);
}

TEST(AlphaIntegral, GridRationalIndicatorIsOne) {
  // every grid point is rational, so the indicator of the rationals sums to 1
  const auto s = alpha_integral([](double) { return 1.0; }, 0.0, 1.0, {7, 11, 13}, 0.0);
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.estimate, 1.0);
}

TEST(AlphaIntegral, LevelDependentIntegrandDoesNotConverge) {
  // 1 on even-numbered grid points of level n, 0 on odd ones: depends on the level sequence
  const auto s = alpha_integral([](double x) { return std::fmod(std::round(x * 64), 2.0) == 0 ? 1.0 : 0.0; }, 0.0,
                                1.0, {16, 32, 64}, 1e-3);
  EXPECT_FALSE(s.converged);
}

TEST(AlphaIntegral, ErrorsNamePointAndLevels) {
  try {
    alpha_integral([](double x) { return 1.0 / (x - 0.5); }, 0.0, 1.0, {4, 8, 16}, 1e-3);
    FAIL() << "expected an error";
  } catch (const GridError& e) {
    EXPECT_NE(std::string(e.what()).find("x = 0.5"), std::string::npos);
  }
  EXPECT_THROW(alpha_integral([](double) { return 1.0; }, 0.0, 1.0, {4, 8}, 1e-3), GridError);
  EXPECT_THROW(alpha_integral([](double) { return 1.0; }, 0.0, 1.0, {8, 4, 16}, 1e-3), GridError);
}

TEST(CompensatedSum, RecoversCancelledLowOrderBits) {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1000.0);
}

TEST(RunBlocks, ResultOrderIndependentOfWorkers) {
  auto work = [](std::uint64_t b, std::uint64_t e) {
    CompensatedSum s;
    for (std::uint64_t i = b; i < e; ++i) s.add(1.0 / static_cast<double>(i + 1));
    return s;
  };
  auto fold = [](const std::vector<CompensatedSum>& parts) {
    CompensatedSum t;
    for (const auto& p : parts) t.merge(p);
    return t.value();
  };
  const double one = fold(run_blocks<CompensatedSum>(100000, {1, 1000}, work));
  const double four = fold(run_blocks<CompensatedSum>(100000, {4, 1000}, work));
  EXPECT_EQ(one, four);
}

}  // namespace
}  // namespace hgrid
