#include <gtest/gtest.h>

#include <cmath>
#include <array>
#include <random>
#include <set>

#include "hgrid/noise.hpp"

namespace hgrid {
namespace {

const NoiseAlphabet kBinary = NoiseAlphabet::binary();

TEST(Alphabet, NormalizedToUnitMeanSquare) {
  const NoiseAlphabet a = NoiseAlphabet::normalized({2.0, 0.0, -2.0});
  double sq = 0;
  for (double q : a.symbols()) sq += q * q;
  EXPECT_NEAR(sq / 3, 1.0, 1e-15);
  EXPECT_TRUE(a.symmetric());
  EXPECT_THROW(NoiseAlphabet::normalized({1.0, 2.0}), NoiseError);
  EXPECT_THROW(NoiseAlphabet::normalized({1.0}), NoiseError);
  EXPECT_FALSE(NoiseAlphabet::normalized({-2.0, 1.0, 1.0}).symmetric());
}

TEST(Enumerate, LevelOneListsFourPathsInOrder) {
  const NoiseEnsemble e = enumerate(GridLevel(1), kBinary);
  ASSERT_EQ(e.size(), 4u);
  const std::vector<std::vector<double>> expected = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  for (std::uint64_t i = 0; i < 4; ++i) EXPECT_EQ(e.path(i).values, expected[i]);
}

TEST(Enumerate, CountIsTwoToTheNPlusOne) {
  EXPECT_EQ(enumerate(GridLevel(8), kBinary).size(), 512u);
  EXPECT_EQ(enumerate(GridLevel(3), NoiseAlphabet::normalized({-1, 0, 1})).size(), 81u);
}

TEST(Enumerate, CapAdvisesSampledMode) {
  try {
    enumerate(GridLevel(40), kBinary);
    FAIL();
  } catch (const NoiseError& e) {
    EXPECT_NE(std::string(e.what()).find("sampled"), std::string::npos);
  }
  EXPECT_THROW(enumerate(GridLevel(10), kBinary, 1000), NoiseError);
}

TEST(Enumerate, EveryPathDistinctAndValuesScaled) {
  const NoiseEnsemble e = enumerate(GridLevel(4), kBinary);
  std::set<std::vector<double>> seen;
  for (std::uint64_t i = 0; i < e.size(); ++i) {
    const NoisePath p = e.path(i);
    for (double v : p.values) EXPECT_EQ(std::abs(v), 2.0);
    seen.insert(p.values);
  }
  EXPECT_EQ(seen.size(), 32u);
}

TEST(Conditional, RestrictionCountsMultiply) {
  const NoiseEnsemble e = enumerate(GridLevel(8), kBinary);
  for (std::size_t len = 0; len <= 8; ++len) {
    const std::uint64_t prefixes = prefix_count(e, len);
    const std::uint64_t members = conditional(e, prefix_values(e, len, 0)).size();
    EXPECT_EQ(prefixes * members, e.size());
    // size independent of the prefix
    EXPECT_EQ(conditional(e, prefix_values(e, len, prefixes - 1)).size(), members);
  }
  EXPECT_EQ(conditional(enumerate(GridLevel(2), kBinary), std::vector<double>{std::sqrt(2.0)}).size(), 4u);
}

TEST(Conditional, MembersShareThePrefix) {
  const NoiseEnsemble e = enumerate(GridLevel(5), kBinary);
  const auto prefix = prefix_values(e, 3, 5);
  const ConditionalEnsemble c = conditional(e, prefix);
  for (std::uint64_t j = 0; j < c.size(); ++j) {
    const NoisePath p = c.path(j);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(p.values[k], prefix[k]);
  }
}

TEST(Conditional, MomentsAfterThePrefixAreExact) {
  const int n = 6;
  const NoiseEnsemble e = enumerate(GridLevel(n), kBinary);
  for (std::size_t len = 1; len <= static_cast<std::size_t>(n); ++len) {
    for (std::uint64_t q = 0; q < prefix_count(e, len); q += 3) {
      const ConditionalEnsemble c = conditional(e, prefix_values(e, len, q));
      EXPECT_EQ(expectation(c, [&](const NoisePath& p) { return p.values[len]; }).mean, 0.0);
      EXPECT_NEAR(expectation(c, [&](const NoisePath& p) { return p.values[len] * p.values[len]; }).mean, n,
                  1e-12 * n);
    }
  }
}

TEST(Conditional, RejectsSampledAndForeignValues) {
  const GridLevel level(4);
  EXPECT_THROW(conditional(sample(level, kBinary, 10, 1), std::vector<double>{2.0}), NoiseError);
  EXPECT_THROW(conditional(enumerate(level, kBinary), std::vector<double>{1.0}), NoiseError);
}

TEST(Expectation, ConstantAndFirstValue) {
  const NoiseEnsemble e = enumerate(GridLevel(8), kBinary);
  EXPECT_EQ(expectation(e, [](const NoisePath&) { return 2.5; }).mean, 2.5);
  EXPECT_EQ(expectation(e, [](const NoisePath& p) { return p.values[0]; }).mean, 0.0);
}

TEST(Expectation, ExactSecondMomentsOnExhaustiveEnsembles) {
  for (const NoiseAlphabet& a : {kBinary, NoiseAlphabet::normalized({-1, 0, 1})}) {
    const int n = 5;
    const NoiseEnsemble e = enumerate(GridLevel(n), a);
    for (int k = 0; k <= n; ++k) {
      for (int j = 0; j <= n; ++j) {
        const double m = expectation(e, [&](const NoisePath& p) { return p.values[k] * p.values[j]; }).mean;
        EXPECT_NEAR(m, k == j ? n : 0.0, 1e-12 * n);
      }
    }
  }
}

TEST(Expectation, TowerPropertyAtLevelFour) {
  const NoiseEnsemble e = enumerate(GridLevel(4), kBinary);
  auto phi = [](const NoisePath& p) {
    double s = 0;
    for (double v : p.values) s = std::sin(s + v) + 0.1 * v * v;
    return s;
  };
  const double total = expectation(e, phi).mean;
  for (std::size_t len = 1; len <= 4; ++len) {
    CompensatedSum tower;
    for (std::uint64_t q = 0; q < prefix_count(e, len); ++q) {
      tower.add(expectation(conditional(e, prefix_values(e, len, q)), phi).mean);
    }
    EXPECT_NEAR(tower.value() / static_cast<double>(prefix_count(e, len)), total, 1e-14);
  }
}

TEST(Expectation, NonFiniteValueNamesThePath) {
  const NoiseEnsemble e = enumerate(GridLevel(2), kBinary);
  try {
    expectation(e, [](const NoisePath& p) { return p.values[0] > 0 && p.values[2] > 0 ? NAN : 1.0; });
    FAIL();
  } catch (const NoiseError& err) {
    EXPECT_NE(std::string(err.what()).find("path 5"), std::string::npos) << err.what();
  }
}

TEST(Sample, SameSeedAndIndexGiveSamePath) {
  const GridLevel level(32);
  const NoiseEnsemble a = sample(level, kBinary, 100, 42);
  const NoiseEnsemble b = sample(level, kBinary, 5000, 42);
  for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(a.path(i).values, b.path(i).values);
  const NoiseEnsemble c = sample(level, kBinary, 100, 43);
  EXPECT_NE(a.path(0).values, c.path(0).values);
}

TEST(Sample, MeanWithinCltBoundAndExactMeanSquare) {
  const int n = 64;
  const std::uint64_t m = 1000000;
  const NoiseEnsemble e = sample(GridLevel(n), kBinary, m, 2024);
  for (int k : {0, 17, 63}) {
    const Expectation mean = expectation(e, [&](const NoisePath& p) { return p.values[k]; });
    EXPECT_LE(std::abs(mean.mean), 4 * std::sqrt(n) / std::sqrt(static_cast<double>(m)));
    const Expectation sq = expectation(e, [&](const NoisePath& p) { return p.values[k] * p.values[k]; });
    EXPECT_NEAR(sq.mean, n, 1e-9);
  }
}

TEST(Sample, SymbolFrequenciesAreUniform) {
  const NoiseAlphabet a = NoiseAlphabet::normalized({-1, 0, 1});
  const NoiseEnsemble e = sample(GridLevel(8), a, 90000, 7);
  std::array<int, 3> counts{};
  for (std::uint64_t i = 0; i < e.size(); ++i) ++counts[e.symbol_index(i, 3)];
  for (int c : counts) EXPECT_NEAR(c, 30000, 4 * std::sqrt(90000 * (1.0 / 3) * (2.0 / 3)));
}

TEST(Sample, StatisticsIndependentOfWorkers) {
  const NoiseEnsemble e = sample(GridLevel(16), kBinary, 50000, 9);
  auto phi = [](const NoisePath& p) { return std::cos(p.values[3]) * p.values[7] + p.values[1]; };
  const Expectation one = expectation(e, phi, {1, 1024});
  const Expectation four = expectation(e, phi, {4, 1024});
  EXPECT_EQ(one.mean, four.mean);
  EXPECT_EQ(one.std_error, four.std_error);
  EXPECT_GT(one.std_error, 0.0);
}

}  // namespace
}  // namespace hgrid
