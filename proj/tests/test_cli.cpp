#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "millerpole/cli.hpp"

using namespace millerpole;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "millerpole");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("millerpole_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name, const std::string& content) const {
    std::ofstream(path_ / name, std::ios::binary) << content;
    return path_ / name;
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

const char* kTwoStage = R"(# comment
topology = "two-stage"
[two-stage]
gm = 1e-3   # trailing comment
R1 = 1e6
R2 = 1e6
C1 = 1e-13
C2 = 1e-11
Cc = 1e-12
gm0 = 1e-5
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Config, TomlDeck) {
  const auto cfg = resolve(parse_toml_deck(kTwoStage), std::nullopt);
  EXPECT_EQ(cfg.topology, Topology::two_stage);
  const auto& p = std::get<TwoStageParams>(cfg.params);
  EXPECT_EQ(p.gm, 1e-3);
  EXPECT_EQ(p.Cc, 1e-12);
  EXPECT_EQ(*p.gm0, 1e-5);
}

TEST(Config, JsonDeckSameSchema) {
  const char* text = R"({"topology": "two-stage", "two-stage": {"gm": 1e-3, "R1": 1e6, "R2": 1e6,
                         "C1": 1e-13, "C2": 1e-11, "Cc": 1e-12, "gm0": 1e-5}})";
  const auto a = resolve(parse_json_deck(text), std::nullopt);
  const auto b = resolve(parse_toml_deck(kTwoStage), std::nullopt);
  EXPECT_EQ(cli::params_to_map(a.params), cli::params_to_map(b.params));
}

TEST(Config, ErrorsNameTheKey) {
  auto message = [](const std::string& text) {
    try {
      resolve(parse_toml_deck(text), std::nullopt);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  std::string missing = kTwoStage;
  missing.replace(missing.find("Cc = 1e-12"), 10, "");
  EXPECT_NE(message(missing).find("Cc"), std::string::npos);
  std::string bad = kTwoStage;
  bad.replace(bad.find("R2 = 1e6"), 8, "R2 = abc");
  EXPECT_NE(message(bad).find("R2"), std::string::npos);
  std::string negative = kTwoStage;
  negative.replace(negative.find("C2 = 1e-11"), 10, "C2 = -1e-11");
  EXPECT_NE(message(negative).find("C2"), std::string::npos);
  EXPECT_NE(message(std::string(kTwoStage) + "Rx = 1\n").find("Rx"), std::string::npos);
  EXPECT_NE(message(std::string(kTwoStage) + "gm = 2\n").find("gm"), std::string::npos);
  EXPECT_FALSE(message("[two-stage]\ngm = 1\n").empty());
}

TEST(Config, ForcedTopologyPicksSection) {
  const auto cfg = resolve(parse_toml_deck(kTwoStage), Topology::two_stage);
  EXPECT_EQ(cfg.topology, Topology::two_stage);
  EXPECT_THROW(resolve(parse_toml_deck(kTwoStage), Topology::nmc), ConfigError);
}

TEST(Sweep, Spec) {
  const auto s = cli::parse_sweep("gm1=1e-6:1e-3:400");
  EXPECT_EQ(s.key, "gm1");
  EXPECT_EQ(s.lo, 1e-6);
  EXPECT_EQ(s.hi, 1e-3);
  EXPECT_EQ(s.n, 400);
  EXPECT_THROW(cli::parse_sweep("gm1=1:2"), ConfigError);
  EXPECT_THROW(cli::parse_sweep("=1:2:3"), ConfigError);
}

TEST(Cli, AnalyzeReportEchoesConfigAndVersion) {
  TempDir dir;
  const auto cfg = dir.file("p.toml", kTwoStage);
  const auto r = run_cli({"analyze", "--config", cfg.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["tool"], cli::kVersion);
  EXPECT_EQ(j["command"], "analyze");
  EXPECT_EQ(j["config"]["topology"], "two-stage");
  EXPECT_EQ(j["config"]["params"]["gm"], 1e-3);
  EXPECT_FALSE(j["stability"]["exact"]["poles"].empty());
  EXPECT_TRUE(j["stability"]["approximate"]["poles"][0].contains("hz"));
}

TEST(Cli, AnalyzeIsDeterministic) {
  TempDir dir;
  const auto cfg = dir.file("p.toml", kTwoStage);
  const auto a = run_cli({"analyze", "--config", cfg.string()});
  const auto b = run_cli({"analyze", "--config", cfg.string()});
  EXPECT_EQ(a.out, b.out);
  const auto out = dir / "r.json";
  ASSERT_EQ(run_cli({"analyze", "--config", cfg.string(), "--out", out.string()}).code, 0);
  EXPECT_EQ(slurp(out), a.out);
}

TEST(Cli, EveryCommandRuns) {
  for (const char* t : {"two-stage", "current-buffer", "nmc"}) {
    for (const char* c : {"analyze", "split", "pm", "compare"}) {
      const auto r = run_cli({c, "--topology", t});
      EXPECT_EQ(r.code, 0) << c << " " << t << ": " << r.err;
      EXPECT_FALSE(r.out.empty());
    }
  }
  EXPECT_EQ(run_cli({"optimize", "--topology", "current-buffer"}).code, 0);
  EXPECT_EQ(run_cli({"optimize", "--topology", "two-stage"}).code, 2);
}

TEST(Cli, CompareTable) {
  const auto r = run_cli({"compare", "--topology", "two-stage"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("exact"), std::string::npos);
  EXPECT_NE(r.out.find("textbook"), std::string::npos);
}

TEST(Cli, LocusCsvAndSvg) {
  TempDir dir;
  const auto csv = dir / "locus.csv";
  const auto svg = dir / "locus.svg";
  const auto r = run_cli({"locus", "--topology", "nmc", "--sweep", "gm1=1e-6:1e-3:40", "--out", csv.string(),
                          "--svg", svg.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(csv);
  EXPECT_EQ(text.rfind("gain,branch,re,im\n", 0), 0u);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const auto t = io::parse_locus_csv(text);
  EXPECT_GE(t.size(), 40u);
  EXPECT_EQ(t.branch_count(), 3u);
  EXPECT_NE(slurp(svg).find("<svg"), std::string::npos);

  const auto k = run_cli({"locus", "--topology", "two-stage", "--sweep", "k=1e-3:1e3:50"});
  ASSERT_EQ(k.code, 0) << k.err;
  EXPECT_EQ(k.out, run_cli({"locus", "--topology", "two-stage", "--sweep", "k=1e-3:1e3:50"}).out);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run_cli({"analyze"}).code, 2);
  EXPECT_EQ(run_cli({"analyze", "--topology", "folded"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"analyze", "--topology", "nmc", "--svg", "x.svg"}).code, 2);
  EXPECT_EQ(run_cli({"analyze", "--config", (dir / "missing.toml").string()}).code, 2);
  const auto bad = dir.file("bad.toml", "topology = \"two-stage\"\n[two-stage]\ngm = oops\n");
  const auto r = run_cli({"analyze", "--config", bad.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("gm"), std::string::npos);
  // numeric failure: unwritable output path
  const auto w = run_cli({"analyze", "--topology", "two-stage", "--out", (dir / "no/such/dir/r.json").string()});
  EXPECT_EQ(w.code, 3);
  EXPECT_NE(w.err.find("io:"), std::string::npos);
  // sweep ranges must start above zero
  EXPECT_EQ(run_cli({"locus", "--topology", "two-stage", "--sweep", "Cc=0:1e-12:10"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, ThreadsEnvironment) {
  TempDir dir;
  const auto a = dir / "a.csv";
  const auto b = dir / "b.csv";
  const std::string base = std::string(MILLERPOLE_CLI_PATH) + " locus --topology two-stage --sweep k=1e-3:1e6:300 --out ";
  ASSERT_EQ(std::system(("MILLERPOLE_THREADS=1 " + base + a.string()).c_str()), 0);
  ASSERT_EQ(std::system(("MILLERPOLE_THREADS=8 " + base + b.string()).c_str()), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  const int bad = std::system(("MILLERPOLE_THREADS=zero " + base + a.string() + " 2>/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(bad), 2);
}
