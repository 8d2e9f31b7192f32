#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;

namespace hgrid::cli {
namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("HGRID_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "hgrid_cli_test";
  const fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Invocation {
  int code;
  std::string out, err;
};

Invocation run(std::vector<std::string> args) {
  args.insert(args.begin(), "hgrid");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Cli, SimulateWritesBinomialDensity) {
  const fs::path dir = scratch("simulate");
  const Invocation r = run({"simulate", "--n", "8", "--f", "0", "--h", "1", "--slices", "0,1", "--out", dir.string()});
  ASSERT_EQ(r.code, kPass) << r.err;
  const auto rows = csv_rows(slurp(dir / "density.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "t");
  EXPECT_EQ(rows[2][0], "1");
  // bin [0, 1/8) collects the 70 of 256 walks with four up-steps
  const auto it = std::find(rows[0].begin(), rows[0].end(), "0");
  ASSERT_NE(it, rows[0].end());
  const std::size_t col = static_cast<std::size_t>(it - rows[0].begin());
  EXPECT_EQ(std::stod(rows[2][col]), 8.0 * 70 / 256);
  EXPECT_EQ(std::stod(rows[1][col]), 8.0);
  double mass = 0;
  for (std::size_t j = 1; j < rows[2].size(); ++j) mass += std::stod(rows[2][j]) / 8;
  EXPECT_NEAR(mass, 1.0, 1e-12);

  const json side = json::parse(slurp(dir / "density.json"));
  EXPECT_EQ(side["level"], 8);
  EXPECT_EQ(side["ensemble"]["paths"], 512);
  EXPECT_EQ(side["config"]["f"], "0");
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  const fs::path a = scratch("threads1"), b = scratch("threads4");
  const std::vector<std::string> base = {"simulate", "--n",    "32",   "--mode", "sampled", "--samples",
                                         "20000",    "--seed", "5",    "--f",    "sin(x)",  "--h",
                                         "1+0.2*x^2"};
  auto with = [&](const fs::path& dir, const char* threads) {
    auto args = base;
    for (const char* s : {"--out", dir.c_str(), "--threads", threads}) args.emplace_back(s);
    return args;
  };
  ASSERT_EQ(run(with(a, "1")).code, kPass);
  ASSERT_EQ(run(with(b, "4")).code, kPass);
  EXPECT_EQ(slurp(a / "density.csv"), slurp(b / "density.csv"));
}

TEST(Cli, UsageErrorsExitTwo) {
  const fs::path dir = scratch("usage");
  const Invocation missing = run({"simulate", "--n", "8", "--f", "0", "--out", dir.string()});
  EXPECT_EQ(missing.code, kUsage);
  EXPECT_NE(missing.err.find("--h"), std::string::npos) << missing.err;
  EXPECT_NE(missing.err.find("Usage"), std::string::npos);

  const Invocation cap = run({"simulate", "--n", "40", "--f", "0", "--h", "1", "--out", dir.string()});
  EXPECT_EQ(cap.code, kUsage);
  EXPECT_NE(cap.err.find("sampled"), std::string::npos) << cap.err;

  EXPECT_EQ(run({"convergence", "--levels", "8,16", "--out", dir.string()}).code, kUsage);
  EXPECT_EQ(run({"simulate", "--n", "8", "--f", "x+", "--h", "1", "--out", dir.string()}).code, kUsage);
  EXPECT_EQ(run({"verify", "bogus"}).code, kUsage);
  EXPECT_EQ(run({}).code, kUsage);
}

TEST(Cli, DivergenceExitsThree) {
  const fs::path dir = scratch("diverge");
  const Invocation r = run({"simulate", "--n", "8", "--f", "x^3", "--h", "0", "--x0", "10", "--out", dir.string()});
  EXPECT_EQ(r.code, kDivergence);
  EXPECT_NE(r.err.find("diverged"), std::string::npos) << r.err;
  EXPECT_EQ(run({"simulate", "--n", "8", "--f", "log(x)", "--h", "1", "--out", dir.string()}).code, kDivergence);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  const fs::path dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"n": 4, "f": "0", "h": "1", "slices": [1], "out": ")" << dir.string() << R"("})";
  }
  ASSERT_EQ(run({"simulate", "--config", (dir / "run.json").string()}).code, kPass);
  EXPECT_EQ(json::parse(slurp(dir / "density.json"))["level"], 4);
  ASSERT_EQ(run({"simulate", "--config", (dir / "run.json").string(), "--n", "6"}).code, kPass);
  const json side = json::parse(slurp(dir / "density.json"));
  EXPECT_EQ(side["level"], 6);
  EXPECT_EQ(side["config"]["h"], "1");

  {
    std::ofstream cfg(dir / "bad.json");
    cfg << R"({"n": 4, "colour": "red"})";
  }
  const Invocation bad = run({"simulate", "--config", (dir / "bad.json").string()});
  EXPECT_EQ(bad.code, kUsage);
  EXPECT_NE(bad.err.find("colour"), std::string::npos) << bad.err;
}

TEST(Cli, VerifyWeakFormPassesAndTightToleranceFails) {
  const fs::path dir = scratch("weakform");
  EXPECT_EQ(run({"verify", "weakform", "--n", "16", "--out", dir.string()}).code, kPass);
  const json j = json::parse(slurp(dir / "weakform.json"));
  EXPECT_DOUBLE_EQ(j["bound"].get<double>(), 0.04 / 16);
  const Invocation tight = run({"verify", "weakform", "--n", "16", "--tol", "1e-9", "--out", dir.string()});
  EXPECT_EQ(tight.code, kToleranceFailure);
  EXPECT_NE(tight.err.find("tolerance failure"), std::string::npos);
}

TEST(Cli, VerifyLemmasAndCrossval) {
  const fs::path dir = scratch("verify");
  EXPECT_EQ(run({"verify", "lemmas", "--out", dir.string()}).code, kPass);
  EXPECT_EQ(json::parse(slurp(dir / "lemmas.json"))["config"]["n"], 8);
  EXPECT_EQ(run({"verify", "lemmas", "--mode", "sampled", "--out", dir.string()}).code, kUsage);

  ASSERT_EQ(run({"verify", "crossval", "--n", "16", "--f", "0", "--h", "0", "--out", dir.string()}).code, kPass);
  EXPECT_EQ(json::parse(slurp(dir / "crossval.json"))["report"]["max_l1"], 0.0);
  EXPECT_EQ(run({"verify", "ito", "--n", "16", "--out", dir.string()}).code, kPass);
  EXPECT_TRUE(fs::exists(dir / "ito.json"));
}

TEST(Cli, ConvergenceTableHasOneRowPerLevel) {
  const fs::path dir = scratch("convergence");
  const Invocation r = run({"convergence", "--levels", "16,4,8", "--out", dir.string()});
  ASSERT_EQ(r.code, kPass) << r.err;
  const auto rows = csv_rows(slurp(dir / "convergence.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1][0], "4");
  EXPECT_EQ(rows[3][0], "16");
  EXPECT_EQ(rows[3][1], "exhaustive");
  const json j = json::parse(slurp(dir / "convergence.json"));
  EXPECT_TRUE(j["exponents"].contains("ito"));
}

TEST(Cli, FpSolveAndDistributions) {
  const fs::path dir = scratch("fp");
  ASSERT_EQ(run({"fp-solve", "--f", "-x", "--h", "1", "--dx", "0.0625", "--out", dir.string()}).code, kPass);
  const auto rows = csv_rows(slurp(dir / "fp.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "1");

  const Invocation pr = run({"pair", "--n", "64", "--dist", "dirac", "--phi", "cos(x)*bump(x/2)"});
  ASSERT_EQ(pr.code, kPass) << pr.err;
  EXPECT_DOUBLE_EQ(json::parse(pr.out)["pairing"].get<double>(), std::exp(-1.0));

  EXPECT_EQ(run({"equivalent", "--n", "128", "--dist", "dirac", "--dist2", "split-dirac"}).code, kPass);
  EXPECT_EQ(run({"equivalent", "--n", "128", "--dist", "dirac", "--dist2", "n2-dirac"}).code, kToleranceFailure);
}

}  // namespace
}  // namespace hgrid::cli
