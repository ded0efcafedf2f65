#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "support.hpp"

using hqml::test::slurp;
using hqml::test::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run(const std::string& args, const TempDir& tmp) {
  const auto out = tmp.path() / "stdout.txt";
  const auto err = tmp.path() / "stderr.txt";
  const std::string cmd = std::string("\"") + HQML_EXE + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

fs::path only_run_dir(const fs::path& root) {
  fs::path found;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) found = e.path();
  return found;
}

void write_small_trojan_config(const fs::path& path) {
  std::ofstream(path) << R"({
    "schema_version": 1, "task": "trojan_qnn", "model": "qnn", "epochs": 2,
    "trojan": {"reduction": "none",
               "synth": {"dims": 2, "categories": 3, "ti_total": 120, "ratio": 10.0}}
  })";
}

}  // namespace

TEST(Cli, HelpExitsZeroEverywhere) {
  TempDir tmp;
  EXPECT_EQ(run("--help", tmp).code, 0);
  for (const char* sub : {"retro-single", "retro-chain", "trojan", "baselines", "tsne", "gen-data",
                          "simcheck", "plot-data"})
    EXPECT_EQ(run(std::string(sub) + " --help", tmp).code, 0) << sub;
}

TEST(Cli, UsageErrorsExitOne) {
  TempDir tmp;
  const auto neg = run("retro-single --epochs -5", tmp);
  EXPECT_EQ(neg.code, 1);
  EXPECT_FALSE(neg.err.empty() && neg.out.empty());
  EXPECT_EQ(run("retro-single --bogus", tmp).code, 1);
  EXPECT_EQ(run("no-such-command", tmp).code, 1);
  EXPECT_EQ(run("", tmp).code, 1);
  EXPECT_EQ(run("trojan --model lstm", tmp).code, 1);
}

TEST(Cli, TrojanRunWithConfigAndSeedOverride) {
  TempDir tmp;
  const auto cfg = tmp.path() / "cfg.json";
  write_small_trojan_config(cfg);
  const auto runs = tmp.path() / "runs";
  const auto o = run("trojan --config \"" + cfg.string() + "\" --seed 7 --out \"" + runs.string() + "\"", tmp);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto dir = only_run_dir(runs);
  ASSERT_FALSE(dir.empty());
  const auto echoed = nlohmann::json::parse(slurp(dir / "config.json"));
  EXPECT_EQ(echoed.at("seed"), 7);
  EXPECT_EQ(echoed.at("epochs"), 2);
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));

  EXPECT_EQ(run("plot-data --run \"" + dir.string() + "\"", tmp).code, 0);
  EXPECT_TRUE(fs::exists(dir / "plot_data.csv"));
}

TEST(Cli, RuntimeErrorsExitTwoWithJson) {
  TempDir tmp;
  const auto o = run("--json retro-single --data /nonexistent/corpus.tsv --out \"" +
                         (tmp.path() / "runs").string() + "\"",
                     tmp);
  EXPECT_EQ(o.code, 2);
  const auto j = nlohmann::json::parse(o.err);
  EXPECT_EQ(j.at("error"), "io");
  EXPECT_TRUE(j.at("message").is_string());

  const auto cfg = tmp.path() / "bad.json";
  std::ofstream(cfg) << R"({"schema_version": 1, "task": "retro_single", "model": "lstm", "lr_typo": 1})";
  const auto bad = run("--json retro-single --config \"" + cfg.string() + "\"", tmp);
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(nlohmann::json::parse(bad.err).at("error"), "config");
}

TEST(Cli, GenDataIsSeededAndReproducible) {
  TempDir tmp;
  const auto a = tmp.path() / "a.tsv", b = tmp.path() / "b.tsv", c = tmp.path() / "c.tsv";
  EXPECT_EQ(run("gen-data smiles-toy --seed 3 --out \"" + a.string() + "\"", tmp).code, 0);
  EXPECT_EQ(run("gen-data smiles-toy --seed 3 --out \"" + b.string() + "\"", tmp).code, 0);
  EXPECT_EQ(run("gen-data smiles-toy --seed 4 --out \"" + c.string() + "\"", tmp).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a), slurp(c));

  const auto f1 = tmp.path() / "f1.csv", f2 = tmp.path() / "f2.csv";
  EXPECT_EQ(run("gen-data trojan-synth --seed 1 --out \"" + f1.string() + "\"", tmp).code, 0);
  EXPECT_EQ(run("gen-data trojan-synth --seed 1 --out \"" + f2.string() + "\"", tmp).code, 0);
  EXPECT_EQ(slurp(f1), slurp(f2));

  // A regular file cannot serve as a parent directory, whatever the user's rights.
  const auto blocker = tmp.path() / "plain-file";
  std::ofstream(blocker) << "x";
  EXPECT_EQ(run("gen-data smiles-toy --out \"" + (blocker / "x.tsv").string() + "\"", tmp).code, 2);
}

TEST(Cli, SimcheckReportsAndPasses) {
  TempDir tmp;
  const auto o = run("simcheck --circuits 50 --vqcs 10 --grad-seeds 5", tmp);
  EXPECT_EQ(o.code, 0) << o.out;
  EXPECT_NE(o.out.find("PASS"), std::string::npos);
}

TEST(Cli, ShippedConfigsParse) {
  TempDir tmp;
  for (const auto& e : fs::directory_iterator(HQML_TEST_CONFIG_DIR)) {
    const auto j = nlohmann::json::parse(slurp(e.path()));
    EXPECT_EQ(j.at("schema_version"), 1) << e.path();
  }
}
