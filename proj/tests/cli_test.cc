#include "fbdsde/cli.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "fbdsde/error.h"
#include "fbdsde/filtering.h"
#include "fbdsde/instances.h"

namespace fbdsde {
namespace {

namespace fs = std::filesystem;

const std::string kSource = FBDSDE_SOURCE_DIR;

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / ("fbdsde_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Result {
  int code;
  std::string out, err;
};

Result Invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCommand(args, out, err);
  return {code, out.str(), err.str()};
}

ErrorCode ParseCode(std::string_view text, std::string* message = nullptr) {
  try {
    ParseConfig(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kInvalidArgument;
}

constexpr std::string_view kMinimal =
    "type = nonzero-sum\nhorizon = 1\nM = 1\ne17 = 1\ne27 = 1\n";

TEST(ParseConfig, MinimalFileGetsDefaults) {
  const ParsedConfig p = ParseConfig(kMinimal);
  EXPECT_EQ(p.config.steps, 8);
  EXPECT_EQ(p.config.paths, 10000);
  EXPECT_EQ(p.config.seed, 42u);
  EXPECT_EQ(p.config.tol, 5e-3);
  const auto& spec = std::get<LqGameSpec>(p.spec);
  EXPECT_EQ(spec.horizon, 1.0);
  EXPECT_TRUE(spec.a1.IsIdenticallyZero());
  EXPECT_EQ(spec.info, InfoStructure::kWFiltration);
}

TEST(ParseConfig, MissingHorizonIsNamed) {
  std::string msg;
  EXPECT_EQ(ParseCode("type = nonzero-sum\nM = 1\ne17 = 1\ne27 = 1\n", &msg),
            ErrorCode::kSchema);
  EXPECT_NE(msg.find("horizon"), std::string::npos) << msg;
}

TEST(ParseConfig, MalformedTextReportsLineAndColumn) {
  std::string msg;
  EXPECT_EQ(ParseCode("type = nonzero-sum\nhorizon = 1\nM = {constant 1\n", &msg),
            ErrorCode::kParse);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
  EXPECT_EQ(ParseCode("horizon 1\n", &msg), ErrorCode::kParse);
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
}

TEST(ParseConfig, SchemaViolationsNameTheField) {
  std::string msg;
  EXPECT_EQ(ParseCode(std::string(kMinimal) + "a9 = 1\n", &msg), ErrorCode::kSchema);
  EXPECT_NE(msg.find("a9"), std::string::npos);
  EXPECT_EQ(ParseCode(std::string(kMinimal) + "a1 = 1\na1 = 2\n", &msg),
            ErrorCode::kSchema);
  EXPECT_NE(msg.find("a1"), std::string::npos);
  EXPECT_EQ(ParseCode("type = nonzero-sum\nhorizon = 1\nM = 1\ne17 = 1\n", &msg),
            ErrorCode::kSchema);
  EXPECT_NE(msg.find("e27"), std::string::npos);
  EXPECT_EQ(ParseCode(std::string(kMinimal) + "l1 = 1\n", &msg), ErrorCode::kSchema);
}

TEST(ParseConfig, CoefficientForms) {
  const ParsedConfig p = ParseConfig(
      std::string(kMinimal) +
      "a0 = 0.25\na1 = {polynomial, 1, 2}\nb0 = {piecewise, 0:1, 0.5:3}\n"
      "c0 = {constant, -4}  # trailing comment\n");
  const auto& s = std::get<LqGameSpec>(p.spec);
  EXPECT_EQ(s.a0(0.7), 0.25);
  EXPECT_EQ(s.a1(0.5), 2.0);
  EXPECT_EQ(s.b0(0.25), 1.0);
  EXPECT_EQ(s.b0(0.5), 3.0);
  EXPECT_EQ(s.c0(0.0), -4.0);
}

TEST(ParseConfig, RoundTripsBothKinds) {
  for (const GameSpec& spec : {GameSpec(SpecA()), GameSpec(SpecZ())}) {
    const std::string text = SerializeSpec(spec);
    const ParsedConfig p = ParseConfig(text);
    EXPECT_TRUE(p.spec == spec);
    EXPECT_EQ(SerializeSpec(p.spec), text);
  }
}

TEST(ParseConfig, ShippedFilesMatchBuiltins) {
  const ParsedConfig a = ParseConfig(ReadFile(kSource + "/specs/spec_a.txt"));
  EXPECT_TRUE(std::get<LqGameSpec>(a.spec) == SpecA());
  const ParsedConfig z = ParseConfig(ReadFile(kSource + "/specs/spec_z.txt"));
  EXPECT_TRUE(std::get<ZeroSumSpec>(z.spec) == SpecZ());
  EXPECT_TRUE(ParseConfig(SerializeSpec(a.spec)).spec == a.spec);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(Fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(RunCommand, ValidateSucceeds) {
  const fs::path dir = FreshDir("validate");
  EXPECT_EQ(Invoke({"validate", "--spec", "specA", "--out", dir.string()}).code, 0);
  EXPECT_EQ(Invoke({"validate", "--spec", kSource + "/specs/spec_z.txt", "--out",
                 dir.string()})
                .code,
            0);
}

TEST(RunCommand, InvalidSpecIsRejected) {
  const fs::path dir = FreshDir("invalid");
  const fs::path file = dir / "bad.txt";
  std::ofstream(file) << "type = nonzero-sum\nhorizon = 1\nM = 1\ne17 = -1\ne27 = 1\n";
  const Result r = Invoke({"validate", "--spec", file.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("e17"), std::string::npos) << r.err;
  EXPECT_EQ(Invoke({"solve", "--spec", file.string(), "--out", dir.string()}).code, 2);
}

TEST(RunCommand, UnknownFlagPrintsUsage) {
  const Result r = Invoke({"validate", "--spec", "specA", "--bogus"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
  EXPECT_EQ(Invoke({"frobnicate", "--spec", "specA"}).code, 2);
  EXPECT_EQ(Invoke({"solve"}).code, 2);
}

TEST(RunCommand, DepthBeyondTreeLimit) {
  const fs::path dir = FreshDir("deep");
  EXPECT_EQ(
      Invoke({"oracle", "--spec", "specA", "--depth", "13", "--out", dir.string()}).code,
      2);
}

TEST(RunCommand, ShiftedPolicyFailsNash) {
  const fs::path dir = FreshDir("corrupt");
  const TimeGrid grid(1.0, 8);
  const RiccatiSolution ric = SolveDecoupling(AssembleFilteringSystem(SpecA()), grid);
  const EquilibriumPolicy pol = SynthesizeEquilibrium(ric, SpecA());
  {
    std::ofstream f(dir / "good.csv");
    pol.WriteCsv(f);
    std::ofstream g(dir / "shifted.csv");
    pol.Shifted(1, 0.2).WriteCsv(g);
  }
  EXPECT_EQ(Invoke({"verify-nash", "--spec", "specA", "--depth", "8", "--policy",
                 (dir / "good.csv").string(), "--out", dir.string()})
                .code,
            0);
  EXPECT_EQ(Invoke({"verify-nash", "--spec", "specA", "--depth", "8", "--policy",
                 (dir / "shifted.csv").string(), "--out", dir.string()})
                .code,
            1);
  EXPECT_NE(ReadFile(dir / "nash_summary.txt").find("status = FAIL"),
            std::string::npos);
}

TEST(RunCommand, MalformedPolicyIsAUsageError) {
  const fs::path dir = FreshDir("malformed");
  std::ofstream(dir / "p.csv") << "k,t,gain1\n0,0,1\n";
  EXPECT_EQ(Invoke({"verify-nash", "--spec", "specA", "--policy",
                 (dir / "p.csv").string(), "--out", dir.string()})
                .code,
            2);
}

TEST(RunCommand, BlowUpIsANumericalBreakdown) {
  const fs::path dir = FreshDir("blowup");
  const Result r = Invoke({"solve", "--spec", kSource + "/tests/data/blowup.txt",
                        "--out", dir.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("riccati-blowup"), std::string::npos) << r.err;
}

std::map<std::string, std::string> Csvs(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") {
      files[entry.path().filename().string()] = ReadFile(entry.path());
    }
  }
  return files;
}

const std::vector<std::vector<std::string>>& AllCommands() {
  static const std::vector<std::vector<std::string>> commands = {
      {"solve", "--spec", "specA"},
      {"simulate", "--spec", "specA", "--paths", "2000", "--depth", "16",
       "--dump-noise"},
      {"oracle", "--spec", "specA", "--depth", "5", "--dump-nodes"},
      {"verify-nash", "--spec", "specA", "--depth", "8"},
      {"verify-saddle", "--spec", "specZ", "--depth", "8"},
      {"gateaux", "--spec", "specA", "--depth", "8"},
      {"consistency", "--spec", "specA", "--depth", "8"},
      {"converge", "--spec", "specA", "--depth", "6"},
  };
  return commands;
}

TEST(RunCommand, CsvOutputsAreByteIdenticalAcrossThreadCounts) {
  for (const auto& base : AllCommands()) {
    std::vector<std::map<std::string, std::string>> runs;
    int n = 0;
    for (const char* threads : {"1", "8", "8"}) {
      const fs::path dir = FreshDir("repro_" + base[0] + std::to_string(n++));
      std::vector<std::string> args = base;
      args.insert(args.end(), {"--threads", threads, "--out", dir.string()});
      const Result r = Invoke(args);
      ASSERT_EQ(r.code, 0) << base[0] << ": " << r.err;
      runs.push_back(Csvs(dir));
    }
    ASSERT_FALSE(runs[0].empty()) << base[0];
    EXPECT_EQ(runs[0], runs[1]) << base[0];
    EXPECT_EQ(runs[1], runs[2]) << base[0];
  }
}

TEST(RunCommand, EveryCsvHasAHeaderAndEveryRunAManifest) {
  const fs::path dir = FreshDir("headers");
  for (const auto& base : AllCommands()) {
    std::vector<std::string> args = base;
    args.insert(args.end(), {"--out", dir.string()});
    ASSERT_EQ(Invoke(args).code, 0) << base[0];
    const std::string manifest = ReadFile(dir / ("manifest_" + base[0] + ".txt"));
    for (const char* key : {"config_hash", "seed", "version", "eigen",
                            "compiler", "wall_time_s", "outputs"}) {
      EXPECT_NE(manifest.find(key), std::string::npos) << base[0] << " " << key;
    }
  }
  const std::map<std::string, std::string> expected = {
      {"oracle.csv", "spec,N,J1,J2"},
      {"nodes.csv", "k,node,w_prefix,b_suffix,W,y,z,Y,Z,u1,u2"},
      {"policy.csv", "k,t,gain1,gain2,offset1,offset2"},
      {"nash.csv", "player,deviation,label,eps,J_candidate,J_deviation,margin,pass"},
      {"minimax.csv", "v1_member,v2_member,J"},
      {"gateaux.csv", "player,deviation,label,derivative,bound,pass"},
      {"consistency.csv", "steps,max_error_Y,max_error_y,bound,pass"},
  };
  const auto files = Csvs(dir);
  for (const auto& [name, header] : expected) {
    ASSERT_TRUE(files.count(name)) << name;
    EXPECT_EQ(files.at(name).substr(0, files.at(name).find('\n')), header);
  }
  for (const auto& [name, body] : files) {
    const std::string first = body.substr(0, body.find('\n'));
    EXPECT_FALSE(first.empty()) << name;
    EXPECT_TRUE(std::isalpha(static_cast<unsigned char>(first[0]))) << name;
  }
}

TEST(RunCommand, ConfigHashTracksTheSpec) {
  const fs::path a = FreshDir("hash_a");
  const fs::path b = FreshDir("hash_b");
  ASSERT_EQ(Invoke({"solve", "--spec", "specA", "--out", a.string()}).code, 0);
  ASSERT_EQ(Invoke({"solve", "--spec", kSource + "/specs/spec_a.txt", "--out",
                 b.string()})
                .code,
            0);
  auto hash = [](const fs::path& dir) {
    const std::string m = ReadFile(dir / "manifest_solve.txt");
    const auto pos = m.find("config_hash");
    return m.substr(pos, m.find('\n', pos) - pos);
  };
  EXPECT_EQ(hash(a), hash(b));
  ASSERT_EQ(Invoke({"solve", "--spec", "specA", "--seed", "7", "--out", b.string()}).code,
            0);
  EXPECT_NE(hash(a), hash(b));
}

TEST(RunCommand, ReportAggregatesSummaries) {
  const fs::path dir = FreshDir("report");
  ASSERT_EQ(Invoke({"verify-nash", "--spec", "specA", "--depth", "8", "--out",
                 dir.string()})
                .code,
            0);
  ASSERT_EQ(Invoke({"gateaux", "--spec", "specA", "--depth", "8", "--out",
                 dir.string()})
                .code,
            0);
  EXPECT_EQ(Invoke({"report", "--out", dir.string()}).code, 0);
  const std::string report = ReadFile(dir / "report.txt");
  EXPECT_NE(report.find("command = verify-nash"), std::string::npos);
  EXPECT_NE(report.find("command = gateaux"), std::string::npos);

  std::ofstream(dir / "zz_summary.txt") << "command = other\nstatus = FAIL\n";
  EXPECT_EQ(Invoke({"report", "--out", dir.string()}).code, 1);
}

TEST(RunCommand, SaddleNeedsZeroSumSpec) {
  const fs::path dir = FreshDir("saddle_kind");
  EXPECT_EQ(Invoke({"verify-saddle", "--spec", "specA", "--out", dir.string()}).code, 2);
}

}  // namespace
}  // namespace fbdsde
