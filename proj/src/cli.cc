#include "fbdsde/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "fbdsde/error.h"
#include "fbdsde/filtering.h"
#include "fbdsde/instances.h"
#include "fbdsde/noise.h"
#include "fbdsde/oracle.h"
#include "fbdsde/parallel.h"
#include "fbdsde/verify.h"

namespace fbdsde {

namespace {

constexpr const char* kVersion = "0.1.0";

const std::vector<std::string>& Commands() {
  static const std::vector<std::string> commands = {
      "validate",      "solve",       "simulate", "oracle",
      "verify-nash",   "verify-saddle", "gateaux", "consistency",
      "converge",      "report"};
  return commands;
}

// A check that ran to completion but did not pass.
struct Outcome {
  bool pass = true;
};

class Run {
 public:
  Run(RunConfig config, GameSpec spec, std::ostream& out, std::ostream& err)
      : cfg_(std::move(config)), spec_(std::move(spec)), out_(out), err_(err) {}

  int Execute();

 private:
  const GameDynamics& dynamics() const {
    return std::visit([](const auto& s) -> const GameDynamics& { return s; },
                      spec_);
  }
  std::array<CostView, 2> costs() const {
    if (const auto* lq = std::get_if<LqGameSpec>(&spec_)) {
      return {PlayerCost(*lq, 1), PlayerCost(*lq, 2)};
    }
    const ZeroSumViews v = ToZeroSum(std::get<ZeroSumSpec>(spec_));
    return {v.player1, v.player2};
  }
  const LqGameSpec& RequireNonzeroSum() const {
    const auto* lq = std::get_if<LqGameSpec>(&spec_);
    if (!lq) {
      throw Error(ErrorCode::kInvalidArgument,
                  cfg_.command + " needs a nonzero-sum spec");
    }
    return *lq;
  }
  const ZeroSumSpec& RequireZeroSum() const {
    const auto* zs = std::get_if<ZeroSumSpec>(&spec_);
    if (!zs) {
      throw Error(ErrorCode::kInvalidArgument,
                  cfg_.command + " needs a zero-sum spec");
    }
    return *zs;
  }
  LinearFbsdeSystem System() const {
    return std::visit([](const auto& s) { return AssembleFilteringSystem(s); },
                      spec_);
  }
  TimeGrid Grid() const { return MakeGrid(dynamics().horizon, cfg_.steps); }
  TreeNoise Tree() const {
    if (cfg_.steps < 1 || cfg_.steps > TreeNoise::kMaxSteps) {
      throw Error(ErrorCode::kResourceLimit,
                  "--depth must be in [1, 12] for tree commands");
    }
    return EnumerateTree(Grid());
  }
  EquilibriumPolicy Policy(const TimeGrid& grid) const;

  std::ofstream Open(const std::string& name);
  void WriteSummary(const std::string& name, bool pass,
                    const std::string& body);
  void WriteManifest(double wall_seconds);

  Outcome Validate();
  Outcome Solve();
  Outcome Simulate();
  Outcome Oracle();
  Outcome VerifyNash();
  Outcome VerifySaddle();
  Outcome Gateaux();
  Outcome Consistency();
  Outcome Converge();
  Outcome Report();

  RunConfig cfg_;
  GameSpec spec_;
  std::ostream& out_;
  std::ostream& err_;
  std::vector<std::string> written_;
};

std::ofstream Run::Open(const std::string& name) {
  const std::filesystem::path path = std::filesystem::path(cfg_.out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot write " + path.string());
  }
  f << std::setprecision(17);
  written_.push_back(name);
  return f;
}

void Run::WriteSummary(const std::string& name, bool pass,
                       const std::string& body) {
  std::ofstream f = Open(name + "_summary.txt");
  f << "command = " << cfg_.command << '\n'
    << "status = " << (pass ? "PASS" : "FAIL") << '\n'
    << body;
}

void Run::WriteManifest(double wall_seconds) {
  const std::string serialized = SerializeSpec(spec_);
  std::ostringstream run_key;
  run_key << serialized << "command=" << cfg_.command << "\ndepth="
          << cfg_.steps << "\npaths=" << cfg_.paths << "\nseed=" << cfg_.seed
          << "\ntol=" << std::setprecision(17) << cfg_.tol
          << "\npolicy=" << cfg_.policy_path << '\n';
  std::ofstream f = Open("manifest_" + cfg_.command + ".txt");
  f << "command = " << cfg_.command << '\n'
    << "spec = " << cfg_.spec_path << '\n'
    << "config_hash = " << std::hex << std::setw(16) << std::setfill('0')
    << Fnv1a(run_key.str()) << std::dec << std::setfill(' ') << '\n'
    << "seed = " << cfg_.seed << '\n'
    << "depth = " << cfg_.steps << '\n'
    << "paths = " << cfg_.paths << '\n'
    << "tol = " << cfg_.tol << '\n'
    << "threads = " << WorkerCount() << '\n'
    << "version = " << kVersion << '\n'
    << "eigen_version = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION
    << '.' << EIGEN_MINOR_VERSION << '\n'
    << "compiler = " << __VERSION__ << '\n'
    << "wall_time_s = " << std::setprecision(6) << wall_seconds << '\n'
    << "outputs =";
  for (const auto& name : written_) f << ' ' << name;
  f << '\n';
}

EquilibriumPolicy Run::Policy(const TimeGrid& grid) const {
  if (cfg_.policy_path.empty()) {
    return SynthesizeEquilibrium(grid, dynamics(), costs());
  }
  std::ifstream in(cfg_.policy_path);
  if (!in) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot read policy file " + cfg_.policy_path);
  }
  return EquilibriumPolicy::ReadCsv(in, grid);
}

Outcome Run::Validate() {
  const ValidationReport report = std::visit(
      [](const auto& s) { return ValidateSpec(s); }, spec_);
  std::ostringstream body;
  for (const auto& v : report.violations) {
    err_ << "violation: " << v << '\n';
    body << "violation = " << v << '\n';
  }
  WriteSummary("validate", report.ok(), body.str());
  out_ << (report.ok() ? "spec is valid" : "spec is invalid") << '\n';
  return {report.ok()};
}

Outcome Run::Solve() {
  const TimeGrid grid = Grid();
  const LinearFbsdeSystem sys = System();
  const RiccatiSolution ric = SolveDecoupling(sys, grid);
  const int n = sys.dimension;
  {
    std::ofstream f = Open("riccati.csv");
    f << "k,t";
    for (int i = 1; i <= n; ++i) {
      for (int j = 1; j <= n; ++j) f << ",P" << i << j;
    }
    for (int i = 1; i <= n; ++i) f << ",h0_" << i;
    for (int i = 1; i <= n; ++i) f << ",h1_" << i;
    f << '\n';
    for (int k = 0; k <= grid.steps(); ++k) {
      f << k << ',' << grid.time(k);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) f << ',' << ric.P[k](i, j);
      }
      for (int i = 0; i < n; ++i) f << ',' << ric.h0[k](i);
      for (int i = 0; i < n; ++i) f << ',' << ric.h1[k](i);
      f << '\n';
    }
  }
  const EquilibriumPolicy policy =
      SynthesizeEquilibrium(grid, dynamics(), costs());
  {
    std::ofstream f = Open("policy.csv");
    policy.WriteCsv(f);
  }
  const Eigen::VectorXd Y0 = ric.P[0] * ric.x0 + ric.h0[0];
  std::ostringstream body;
  body << std::setprecision(17) << "Y0 = " << Y0(0) << '\n'
       << "y0 = " << ric.x0(0) << '\n'
       << "max_lambda_condition = " << ric.diagnostics.max_lambda_condition
       << '\n'
       << "initial_condition = " << ric.diagnostics.initial_condition << '\n'
       << "max_abs_P = " << ric.diagnostics.max_abs_P << '\n';
  WriteSummary("solve", true, body.str());
  out_ << "filtered Y(0) = " << std::setprecision(10) << Y0(0) << '\n';
  return {};
}

Outcome Run::Simulate() {
  if (cfg_.paths < 1) {
    throw Error(ErrorCode::kInvalidArgument, "--paths must be positive");
  }
  const TimeGrid grid = Grid();
  const LinearFbsdeSystem sys = System();
  const RiccatiSolution ric = SolveDecoupling(sys, grid);
  const PathEnsemble paths = SamplePaths(grid, cfg_.paths, cfg_.seed);
  const FilteredTrajectories traj = SimulateFiltered(ric, sys, paths);
  const ResidualStats residual = DecouplingResidual(ric, sys, paths);
  const EquilibriumPolicy policy = Policy(grid);
  if (cfg_.dump_noise) {
    std::ofstream f = Open("noise.csv");
    paths.WriteCsv(f);
  }
  {
    std::ofstream f = Open("trajectories.csv");
    f << "path,k,t,W,ytilde,p1tilde,p2tilde,Ytilde,q1tilde,q2tilde,Ztilde,"
         "qbar1tilde,qbar2tilde,u1,u2\n";
    for (int j = 0; j < traj.paths(); ++j) {
      for (int k = 0; k <= traj.steps(); ++k) {
        f << j << ',' << k << ',' << grid.time(k) << ',' << traj.W(j, k);
        for (int i = 0; i < 3; ++i) f << ',' << traj.x(j, k)(i);
        for (int i = 0; i < 3; ++i) f << ',' << traj.Y(j, k)(i);
        for (int i = 0; i < 3; ++i) f << ',' << traj.Z(j, k)(i);
        if (k < traj.steps()) {
          const ControlPair u =
              policy.Controls(k, traj.x(j, k)(1), traj.x(j, k)(2));
          f << ',' << u.v1 << ',' << u.v2 << '\n';
        } else {
          f << ",,\n";  // no control at the terminal node
        }
      }
    }
  }
  std::ostringstream body;
  body << std::setprecision(17) << "residual_max_abs = " << residual.max_abs
       << '\n'
       << "residual_step_rms = " << residual.step_rms << '\n'
       << "residual_accumulated_rms = " << residual.accumulated_rms << '\n';
  WriteSummary("simulate", true, body.str());
  return {};
}

Outcome Run::Oracle() {
  const TreeNoise tree = Tree();
  const auto c = costs();
  const PolicyOnTree policy =
      CandidateOnTree(dynamics(), c, Policy(tree.grid()), tree);
  const TreeSolution sol = SolveOnTree(dynamics(), policy, tree);
  const double J1 = EvalCostOnTree(c[0], sol, policy, tree);
  const double J2 = EvalCostOnTree(c[1], sol, policy, tree);
  {
    std::ofstream f = Open("oracle.csv");
    // Runtime lives in the manifest so that this file is reproducible.
    f << "spec,N,J1,J2\n"
      << cfg_.spec_path << ',' << cfg_.steps << ',' << J1 << ',' << J2 << '\n';
  }
  if (cfg_.dump_nodes) {
    std::ofstream f = Open("nodes.csv");
    WriteNodeDump(sol, policy, tree, f);
  }
  std::ostringstream body;
  body << std::setprecision(17) << "J1 = " << J1 << '\n'
       << "J2 = " << J2 << '\n';
  WriteSummary("oracle", true, body.str());
  out_ << std::setprecision(10) << "J1 = " << J1 << "  J2 = " << J2 << '\n';
  return {};
}

Outcome Run::VerifyNash() {
  const TreeNoise tree = Tree();
  const auto c = costs();
  const PolicyOnTree candidate =
      CandidateOnTree(dynamics(), c, Policy(tree.grid()), tree);
  const GameReport report = NashCheck(dynamics(), c, candidate,
                                      StandardDeviations(), tree, cfg_.tol);
  {
    std::ofstream f = Open("nash.csv");
    report.WriteCsv(f);
  }
  std::ostringstream body;
  report.WriteSummary(body);
  WriteSummary("nash", report.pass, body.str());
  report.WriteSummary(out_);
  return {report.pass};
}

Outcome Run::VerifySaddle() {
  const ZeroSumSpec& zs = RequireZeroSum();
  const TreeNoise tree = Tree();
  const EquilibriumPolicy policy = Policy(tree.grid());
  const GameReport saddle =
      SaddleCheck(zs, policy, StandardDeviations(), tree, cfg_.tol);
  const std::vector<double> eps = {-0.5, -0.25, 0.25, 0.5};
  const MinimaxReport minimax = MinimaxGapCheck(
      zs, policy, MakeFamily({1, Deviation::Kind::kConstant, 1.0, 0.0, 0.0}, eps),
      MakeFamily({2, Deviation::Kind::kConstant, 1.0, 0.0, 0.0}, eps), tree);
  const double sum = saddle.candidate_payoff[0] + saddle.candidate_payoff[1];
  const bool sum_ok = std::abs(sum) <= 1e-12;
  const bool pass = saddle.pass && minimax.Passes(cfg_.tol) && sum_ok;
  {
    std::ofstream f = Open("saddle.csv");
    saddle.WriteCsv(f);
  }
  {
    std::ofstream f = Open("minimax.csv");
    f << "v1_member,v2_member,J\n";
    for (std::size_t a = 0; a < minimax.values.size(); ++a) {
      for (std::size_t b = 0; b < minimax.values[a].size(); ++b) {
        f << a << ',' << b << ',' << minimax.values[a][b] << '\n';
      }
    }
  }
  std::ostringstream body;
  saddle.WriteSummary(body);
  body << std::setprecision(12) << "J1 + J2 = " << sum << '\n'
       << "family-restricted sup-inf = " << minimax.sup_inf << '\n'
       << "family-restricted inf-sup = " << minimax.inf_sup << '\n'
       << "family-restricted gap = " << minimax.gap << '\n'
       << "J(candidate) = " << minimax.candidate_value << '\n'
       << "minimax: " << (minimax.Passes(cfg_.tol) ? "PASS" : "FAIL") << '\n';
  WriteSummary("saddle", pass, body.str());
  out_ << body.str();
  return {pass};
}

Outcome Run::Gateaux() {
  const TreeNoise tree = Tree();
  const auto c = costs();
  const LinearFbsdeSystem sys = System();
  const RiccatiSolution ric = SolveDecoupling(sys, tree.grid());
  const DecoupledDynamics dyn(ric, sys);
  const EquilibriumPolicy policy = Policy(tree.grid());
  const PolicyOnTree candidate =
      PolicyOnTree::FromEquilibrium(policy, dyn, tree);
  const double stationarity =
      MaxStationarityResidual(dynamics(), c, policy, RunFilteredOnTree(dyn, tree));
  const double bound = 10.0 * tree.grid().dt();
  const DeviationSet devs = StandardDeviations();
  std::vector<double> derivative(devs.size());
  ParallelFor(devs.size(), [&](std::size_t n) {
    const Deviation& beta = devs[n];
    derivative[n] = GateauxCheck(dynamics(), c[beta.player - 1], candidate,
                                 beta.player, beta, tree, 0.05);
  });
  bool pass = stationarity <= 1e-12;
  {
    std::ofstream f = Open("gateaux.csv");
    f << "player,deviation,label,derivative,bound,pass\n";
    for (std::size_t n = 0; n < devs.size(); ++n) {
      const bool ok = std::abs(derivative[n]) <= bound;
      pass = pass && ok;
      f << devs[n].player << ',' << n << ",\"" << devs[n].Label() << "\","
        << derivative[n] << ',' << bound << ',' << (ok ? 1 : 0) << '\n';
    }
  }
  std::ostringstream body;
  body << std::setprecision(12) << "stationarity_max_residual = "
       << stationarity << '\n'
       << "gateaux_bound = " << bound << '\n';
  WriteSummary("gateaux", pass, body.str());
  out_ << body.str();
  return {pass};
}

Outcome Run::Consistency() {
  const LqGameSpec& spec = RequireNonzeroSum();
  Tree();
  std::vector<int> depths;
  for (int N : {4, 6, 8}) {
    if (N <= cfg_.steps) depths.push_back(N);
  }
  if (depths.empty() || depths.back() != cfg_.steps) {
    depths.push_back(cfg_.steps);
  }
  const LinearFbsdeSystem sys = AssembleFilteringSystem(spec);
  bool pass = true;
  double previous = std::numeric_limits<double>::infinity();
  std::ofstream f = Open("consistency.csv");
  f << "steps,max_error_Y,max_error_y,bound,pass\n";
  for (int N : depths) {
    const TreeNoise tree = EnumerateTree(MakeGrid(spec.horizon, N));
    const ConsistencyReport r =
        FilterConsistencyCheck(spec, SolveDecoupling(sys, tree.grid()), tree);
    const double bound = 10.0 * tree.grid().dt();
    const bool ok = r.max_error() <= bound && r.max_error() < previous;
    previous = r.max_error();
    pass = pass && ok;
    f << N << ',' << r.max_error_Y << ',' << r.max_error_y << ',' << bound
      << ',' << (ok ? 1 : 0) << '\n';
  }
  WriteSummary("consistency", pass, "");
  return {pass};
}

Outcome Run::Converge() {
  const LqGameSpec& spec = RequireNonzeroSum();
  Tree();
  std::vector<int> depths;
  for (int N = 2; N <= cfg_.steps; N += 2) depths.push_back(N);
  if (depths.empty() || depths.back() != cfg_.steps) {
    depths.push_back(cfg_.steps);
  }
  const ConvergenceReport report = ConvergenceStudy(spec, depths);
  {
    std::ofstream f = Open("convergence.csv");
    report.WriteCsv(f);
  }
  std::ostringstream body;
  body << std::setprecision(17) << "reference_Y0 = " << report.reference_Y0
       << '\n';
  WriteSummary("converge", true, body.str());
  return {};
}

Outcome Run::Report() {
  namespace fs = std::filesystem;
  std::vector<fs::path> summaries;
  if (fs::is_directory(cfg_.out_dir)) {
    for (const auto& entry : fs::directory_iterator(cfg_.out_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 12 && name.ends_with("_summary.txt")) {
        summaries.push_back(entry.path());
      }
    }
  }
  if (summaries.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no summaries under " + cfg_.out_dir + "; run checks first");
  }
  std::sort(summaries.begin(), summaries.end());
  std::ostringstream all;
  bool pass = true;
  for (const auto& path : summaries) {
    std::ifstream in(path);
    std::stringstream text;
    text << in.rdbuf();
    if (text.str().find("status = FAIL") != std::string::npos) pass = false;
    all << "## " << path.filename().string() << '\n' << text.str() << '\n';
  }
  {
    std::ofstream f = Open("report.txt");
    f << "overall = " << (pass ? "PASS" : "FAIL") << "\n\n" << all.str();
  }
  out_ << "report: " << summaries.size() << " summaries, "
       << (pass ? "all pass" : "some checks failed") << '\n';
  return {pass};
}

int Run::Execute() {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg_.out_dir);
  if (cfg_.command != "validate" && cfg_.command != "report") {
    const ValidationReport report = std::visit(
        [](const auto& s) { return ValidateSpec(s); }, spec_);
    if (!report.ok()) {
      for (const auto& v : report.violations) err_ << "violation: " << v << '\n';
      throw Error(ErrorCode::kValidation, "spec failed validation");
    }
  }
  Outcome outcome;
  const std::string& c = cfg_.command;
  if (c == "validate") outcome = Validate();
  else if (c == "solve") outcome = Solve();
  else if (c == "simulate") outcome = Simulate();
  else if (c == "oracle") outcome = Oracle();
  else if (c == "verify-nash") outcome = VerifyNash();
  else if (c == "verify-saddle") outcome = VerifySaddle();
  else if (c == "gateaux") outcome = Gateaux();
  else if (c == "consistency") outcome = Consistency();
  else if (c == "converge") outcome = Converge();
  else if (c == "report") outcome = Report();
  const double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  WriteManifest(wall);
  return outcome.pass ? 0 : 1;
}

ParsedConfig LoadSpec(const std::string& spec) {
  if (spec == "specA") return {RunConfig{}, SpecA()};
  if (spec == "specZ") return {RunConfig{}, SpecZ()};
  std::ifstream in(spec);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot read " + spec);
  std::stringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str());
}

}  // namespace

int RunCommand(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Partial-information LQ FBDSDE game: equilibrium synthesis "
               "and verification"};
  app.name("fbdsde");
  RunConfig flags;
  app.add_option("command", flags.command, "Subcommand")
      ->required()
      ->check(CLI::IsMember(Commands()));
  auto* spec_opt = app.add_option(
      "--spec", flags.spec_path, "Spec file, or the builtin specA / specZ");
  auto* depth_opt =
      app.add_option("--depth", flags.steps, "Time steps N (tree: N <= 12)");
  auto* paths_opt =
      app.add_option("--paths", flags.paths, "Monte Carlo path count");
  auto* seed_opt = app.add_option("--seed", flags.seed, "Random seed");
  auto* tol_opt = app.add_option("--tol", flags.tol, "Check tolerance");
  app.add_option("--out", flags.out_dir, "Output directory")
      ->capture_default_str();
  app.add_option("--threads", flags.threads, "Worker cap (0: all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--policy", flags.policy_path,
                 "Policy CSV (k,t,gain1,gain2,offset1,offset2)");
  app.add_flag("--dump-noise", flags.dump_noise, "simulate: write noise.csv");
  app.add_flag("--dump-nodes", flags.dump_nodes,
               "oracle: write nodes.csv (N <= 6)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (flags.command != "report" && !spec_opt->count()) {
      err << "error: --spec is required\n\n" << app.help();
      return 2;
    }
    ParsedConfig parsed = flags.command == "report"
                              ? ParsedConfig{RunConfig{}, SpecA()}
                              : LoadSpec(flags.spec_path);
    RunConfig cfg = parsed.config;
    cfg.spec_path = flags.spec_path;
    cfg.command = flags.command;
    cfg.out_dir = flags.out_dir;
    cfg.threads = flags.threads;
    cfg.policy_path = flags.policy_path;
    cfg.dump_noise = flags.dump_noise;
    cfg.dump_nodes = flags.dump_nodes;
    if (depth_opt->count()) cfg.steps = flags.steps;
    if (paths_opt->count()) cfg.paths = flags.paths;
    if (seed_opt->count()) cfg.seed = flags.seed;
    if (tol_opt->count()) cfg.tol = flags.tol;
    if (cfg.steps < 1) {
      throw Error(ErrorCode::kInvalidArgument, "--depth must be positive");
    }
    const unsigned hw = std::max(1U, std::thread::hardware_concurrency());
    SetWorkerCount(cfg.threads > 0 ? cfg.threads : static_cast<int>(hw));
    return Run(cfg, parsed.spec, out, err).Execute();
  } catch (const Error& e) {
    err << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << '\n';
    if (e.code() == ErrorCode::kDecouplingBreakdown ||
        e.code() == ErrorCode::kRiccatiBlowup) {
      return 3;
    }
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace fbdsde
