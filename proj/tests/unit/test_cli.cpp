#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "fct_cli/dispatch.hpp"

namespace fct::cli {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "fct");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  CliResult r;
  r.code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("fct_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "run_manifest.json")); }

// Drops the trailing wall_ms column of every line.
std::string without_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

TEST(Cli, HelpExitsZero) {
  CliResult r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("gradcheck"), std::string::npos);
  EXPECT_NE(r.out.find("bench"), std::string::npos);
}

TEST(Cli, VersionExitsZero) { EXPECT_EQ(run({"--version"}).code, kExitOk); }

TEST(Cli, UnknownSubcommandIsUsageError) {
  CliResult r = run({"frobnicate"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, NegativeStepsIsUsageErrorWithManifest) {
  fs::path dir = fresh("negative_steps");
  CliResult r = run({"train", "--steps", "-1", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitUsage);
  nlohmann::json m = manifest(dir);
  EXPECT_EQ(m["subcommand"], "train");
  EXPECT_EQ(m["exit_code"], kExitUsage);
  EXPECT_FALSE(m["error"].get<std::string>().empty());
}

TEST(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run({"probe", "--bogus", "1"}).code, kExitUsage); }

TEST(Cli, GradcheckPassesAndWritesCsv) {
  fs::path dir = fresh("gradcheck");
  CliResult r = run({"gradcheck", "--seed", "7", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  std::string csv = slurp(dir / "gradcheck.csv");
  EXPECT_EQ(csv.rfind("op,max_rel_err,worst_coord,pass\n", 0), 0u);
  EXPECT_EQ(csv.find(",0\n"), std::string::npos) << csv;
  nlohmann::json m = manifest(dir);
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_FALSE(m["version"].get<std::string>().empty());
  EXPECT_TRUE(m.contains("started_at"));
  EXPECT_TRUE(m.contains("finished_at"));
}

TEST(Cli, ProbeWritesBothSides) {
  fs::path dir = fresh("probe");
  EXPECT_EQ(run({"associativity-probe", "--sizes", "4,8", "--out", dir.string()}).code, kExitOk);
  std::string csv = slurp(dir / "associativity.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_NE(line.find("lhs_norm"), std::string::npos);
  EXPECT_NE(line.find("rhs_norm"), std::string::npos);
  int rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  EXPECT_EQ(rows, 2);
}

TEST(Cli, ProbeRejectsLargeSizes) { EXPECT_EQ(run({"probe", "--sizes", "64", "--out", fresh("p64").string()}).code, kExitUsage); }

TEST(Cli, BenchWritesCsvBesideRequestedPath) {
  fs::path dir = fresh("bench");
  fs::create_directories(dir);
  CliResult r = run({"bench", "--mechanisms", "sa,csa", "--sizes", "16,32", "--trials", "2", "--warmups", "0", "-c", "4",
               "--no-pin", "--table2", "none", "--out", (dir / "b.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::string csv = slurp(dir / "b.csv");
  EXPECT_EQ(csv.rfind("mechanism,n,c,analytic_flops,measured_ns,bytes_peak,trials,status\n", 0), 0u);
  EXPECT_TRUE(fs::exists(dir / "run_manifest.json"));
}

TEST(Cli, TrainEvalInspectRoundTrip) {
  fs::path dir = fresh("train");
  CliResult r = run({"train", "--config", "micro", "--steps", "3", "--batch", "4", "--seed", "2", "--threads", "1",
               "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "records.csv"));
  EXPECT_TRUE(fs::exists(dir / "checkpoint" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));

  fs::path again = fresh("train_again");
  run({"train", "--config", "micro", "--steps", "3", "--batch", "4", "--seed", "2", "--threads", "1", "--out",
       again.string()});
  EXPECT_EQ(without_wall(slurp(dir / "records.csv")), without_wall(slurp(again / "records.csv")));

  fs::path ev = fresh("eval");
  ASSERT_EQ(run({"eval", "--ckpt", (dir / "checkpoint").string(), "--samples", "8", "--out", ev.string()}).code,
            kExitOk);
  nlohmann::json e = nlohmann::json::parse(slurp(ev / "eval.json"));
  EXPECT_GE(e["oa"].get<double>(), 0.0);

  fs::path in = fresh("inspect");
  ASSERT_EQ(run({"inspect", "--ckpt", (dir / "checkpoint").string(), "--out", in.string()}).code, kExitOk);
  EXPECT_TRUE(fs::exists(in / "inspect.json"));
}

TEST(Cli, EvalOfMissingCheckpointFails) {
  fs::path dir = fresh("eval_missing");
  CliResult r = run({"eval", "--ckpt", (dir / "nothing").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, kExitVerificationFailed);
  EXPECT_EQ(manifest(dir)["exit_code"], kExitVerificationFailed);
}

}  // namespace
}  // namespace fct::cli
