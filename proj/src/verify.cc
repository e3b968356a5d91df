#include "fbdsde/verify.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fbdsde/error.h"
#include "fbdsde/hamiltonian.h"
#include "fbdsde/parallel.h"

namespace fbdsde {

namespace {

PolicyOnTree::Rule AsRule(const Deviation& beta) {
  return [beta](int, double t, double w) { return beta(t, w); };
}

std::array<CostView, 2> Costs(const LqGameSpec& spec) {
  return {PlayerCost(spec, 1), PlayerCost(spec, 2)};
}

std::array<CostView, 2> Costs(const ZeroSumSpec& spec) {
  const ZeroSumViews views = ToZeroSum(spec);
  return {views.player1, views.player2};
}

double Payoff(const GameDynamics& dynamics, const CostView& cost,
              const PolicyOnTree& policy, const TreeNoise& tree) {
  const TreeSolution sol = SolveOnTree(dynamics, policy, tree);
  return EvalCostOnTree(cost, sol, policy, tree);
}

}  // namespace

double Deviation::operator()(double t, double w) const {
  switch (kind) {
    case Kind::kConstant:
      return amplitude;
    case Kind::kSinusoid:
      return amplitude *
             std::sin(2.0 * std::numbers::pi * frequency * t + phase);
    case Kind::kWFeedback:
      return amplitude * w;
  }
  return 0.0;
}

std::string Deviation::Label() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::kConstant:
      out << "constant(" << amplitude << ")";
      break;
    case Kind::kSinusoid:
      out << "sinusoid(" << amplitude << " f=" << frequency
          << " phase=" << phase << ")";
      break;
    case Kind::kWFeedback:
      out << "w-feedback(" << amplitude << ")";
      break;
  }
  return out.str();
}

DeviationSet StandardDeviations(int per_player) {
  using K = Deviation::Kind;
  constexpr double pi = std::numbers::pi;
  const std::vector<Deviation> shapes = {
      {1, K::kConstant, 1.0, 0.0, 0.0},
      {1, K::kWFeedback, 1.0, 0.0, 0.0},
      {1, K::kSinusoid, 1.0, 0.5, 0.0},
      {1, K::kSinusoid, 1.0, 1.0, 0.0},
      {1, K::kSinusoid, 1.0, 1.0, pi / 2},
      {1, K::kSinusoid, 1.0, 2.0, 0.0},
      {1, K::kSinusoid, 1.0, 2.0, pi / 2},
      {1, K::kSinusoid, 1.0, 3.0, pi / 4},
      {1, K::kSinusoid, 1.0, 1.5, pi / 3},
      {1, K::kSinusoid, 1.0, 0.75, pi / 6},
  };
  DeviationSet devs;
  for (int player = 1; player <= 2; ++player) {
    for (int n = 0; n < per_player; ++n) {
      Deviation d = shapes[static_cast<std::size_t>(n) % shapes.size()];
      d.player = player;
      // Cycle amplitudes when more shapes are requested than exist.
      d.amplitude /= static_cast<double>(1 + n / shapes.size());
      devs.push_back(d);
    }
  }
  return devs;
}

void GameReport::WriteCsv(std::ostream& out) const {
  out << "player,deviation,label,eps,J_candidate,J_deviation,margin,pass\n";
  const auto old_precision = out.precision(17);
  for (const auto& o : outcomes) {
    out << o.player << ',' << o.deviation << ",\"" << o.label << "\","
        << o.eps << ',' << candidate_payoff[o.player - 1] << ',' << o.payoff
        << ',' << o.margin << ',' << (o.pass ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

void GameReport::WriteSummary(std::ostream& out) const {
  const auto old_precision = out.precision(12);
  out << (zero_sum ? "saddle" : "nash") << " check: "
      << (pass ? "PASS" : "FAIL") << '\n'
      << "  family-restricted over " << outcomes.size()
      << " deviation evaluations\n"
      << "  tolerance: " << tolerance << '\n'
      << "  J1(candidate): " << candidate_payoff[0] << '\n'
      << "  J2(candidate): " << candidate_payoff[1] << '\n'
      << "  worst margin: " << worst_margin << '\n';
  out.precision(old_precision);
}

PolicyOnTree CandidateOnTree(const GameDynamics& dynamics,
                             const std::array<CostView, 2>& costs,
                             const EquilibriumPolicy& policy,
                             const TreeNoise& tree) {
  const LinearFbsdeSystem sys = AssembleFilteringSystem(dynamics, costs);
  const RiccatiSolution ric = SolveDecoupling(sys, tree.grid());
  return PolicyOnTree::FromEquilibrium(policy, DecoupledDynamics(ric, sys),
                                       tree);
}

GameReport NashCheck(const GameDynamics& dynamics,
                     const std::array<CostView, 2>& costs,
                     const PolicyOnTree& candidate, const DeviationSet& devs,
                     const TreeNoise& tree, double tol) {
  if (devs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "deviation set is empty");
  }
  GameReport report;
  report.tolerance = tol;
  {
    const TreeSolution sol = SolveOnTree(dynamics, candidate, tree);
    for (int i = 0; i < 2; ++i) {
      report.candidate_payoff[i] =
          EvalCostOnTree(costs[i], sol, candidate, tree);
    }
  }
  const std::size_t per_dev = kEpsilonGrid.size();
  report.outcomes.resize(devs.size() * per_dev);
  ParallelFor(report.outcomes.size(), [&](std::size_t n) {
    const std::size_t d = n / per_dev;
    const Deviation& beta = devs[d];
    const double eps = kEpsilonGrid[n % per_dev];
    const PolicyOnTree deviated =
        candidate.Perturbed(tree, beta.player, eps, AsRule(beta));
    DeviationOutcome& o = report.outcomes[n];
    o.player = beta.player;
    o.deviation = d;
    o.label = beta.Label();
    o.eps = eps;
    o.payoff = Payoff(dynamics, costs[beta.player - 1], deviated, tree);
    o.margin = report.candidate_payoff[beta.player - 1] - o.payoff;
    o.pass = o.payoff <= report.candidate_payoff[beta.player - 1] + tol;
  });
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& o : report.outcomes) {
    report.worst_margin = std::min(report.worst_margin, o.margin);
    report.pass = report.pass && o.pass;
  }
  return report;
}

GameReport NashCheck(const LqGameSpec& spec, const EquilibriumPolicy& policy,
                     const DeviationSet& devs, const TreeNoise& tree,
                     double tol) {
  const auto costs = Costs(spec);
  const PolicyOnTree candidate = CandidateOnTree(spec, costs, policy, tree);
  return NashCheck(spec, costs, candidate, devs, tree, tol);
}

double GateauxCheck(const GameDynamics& dynamics, const CostView& cost,
                    const PolicyOnTree& candidate, int player,
                    const Deviation& beta, const TreeNoise& tree, double eps) {
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Gateaux step must be positive");
  }
  const auto rule = AsRule(beta);
  const double up =
      Payoff(dynamics, cost, candidate.Perturbed(tree, player, eps, rule), tree);
  const double down = Payoff(
      dynamics, cost, candidate.Perturbed(tree, player, -eps, rule), tree);
  return (up - down) / (2.0 * eps);
}

double GateauxCheck(const LqGameSpec& spec, const EquilibriumPolicy& policy,
                    int player, const Deviation& beta, const TreeNoise& tree,
                    double eps) {
  const auto costs = Costs(spec);
  const PolicyOnTree candidate = CandidateOnTree(spec, costs, policy, tree);
  return GateauxCheck(spec, costs[player - 1], candidate, player, beta, tree,
                      eps);
}

GameReport SaddleCheck(const ZeroSumSpec& spec, const EquilibriumPolicy& policy,
                       const DeviationSet& devs, const TreeNoise& tree,
                       double tol) {
  const bool both = std::any_of(devs.begin(), devs.end(),
                                [](const Deviation& d) { return d.player == 1; }) &&
                    std::any_of(devs.begin(), devs.end(),
                                [](const Deviation& d) { return d.player == 2; });
  if (!both) {
    throw Error(ErrorCode::kInvalidArgument,
                "saddle check needs deviations for both players");
  }
  const auto costs = Costs(spec);
  const PolicyOnTree candidate = CandidateOnTree(spec, costs, policy, tree);
  GameReport report = NashCheck(spec, costs, candidate, devs, tree, tol);
  report.zero_sum = true;
  return report;
}

std::vector<FamilyMember> MakeFamily(const Deviation& beta,
                                     const std::vector<double>& eps,
                                     bool include_candidate) {
  std::vector<FamilyMember> family;
  if (include_candidate) family.push_back({std::nullopt, 0.0});
  for (double e : eps) family.push_back({beta, e});
  return family;
}

bool MinimaxReport::Passes(double tol) const {
  return candidate_in_family && gap <= tol &&
         candidate_value >= sup_inf - tol && candidate_value <= inf_sup + tol;
}

MinimaxReport MinimaxGapCheck(const ZeroSumSpec& spec,
                              const EquilibriumPolicy& policy,
                              const std::vector<FamilyMember>& family1,
                              const std::vector<FamilyMember>& family2,
                              const TreeNoise& tree) {
  if (family1.empty() || family2.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "min-max families must be nonempty for both players");
  }
  const auto costs = Costs(spec);
  const PolicyOnTree candidate = CandidateOnTree(spec, costs, policy, tree);
  auto member_policy = [&](const PolicyOnTree& base, int player,
                           const FamilyMember& m) {
    if (!m.beta) return base;
    return base.Perturbed(tree, player, m.eps, AsRule(*m.beta));
  };
  auto is_candidate = [](const FamilyMember& m) {
    return !m.beta || m.eps == 0.0;
  };

  MinimaxReport report;
  report.values.assign(family1.size(), std::vector<double>(family2.size()));
  ParallelFor(family1.size() * family2.size(), [&](std::size_t n) {
    const std::size_t a = n / family2.size();
    const std::size_t b = n % family2.size();
    const PolicyOnTree p =
        member_policy(member_policy(candidate, 1, family1[a]), 2, family2[b]);
    // J is the payoff of player 2.
    report.values[a][b] = Payoff(spec, costs[1], p, tree);
  });
  report.candidate_value = Payoff(spec, costs[1], candidate, tree);
  report.candidate_in_family =
      std::any_of(family1.begin(), family1.end(), is_candidate) &&
      std::any_of(family2.begin(), family2.end(), is_candidate);

  report.sup_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < family2.size(); ++b) {
    double inner = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < family1.size(); ++a) {
      inner = std::min(inner, report.values[a][b]);
    }
    report.sup_inf = std::max(report.sup_inf, inner);
  }
  report.inf_sup = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < family1.size(); ++a) {
    const double inner =
        *std::max_element(report.values[a].begin(), report.values[a].end());
    report.inf_sup = std::min(report.inf_sup, inner);
  }
  report.gap = report.inf_sup - report.sup_inf;
  return report;
}

double MaxStationarityResidual(const GameDynamics& dynamics,
                               const std::array<CostView, 2>& costs,
                               const EquilibriumPolicy& policy,
                               const FilteredTreeStates& states) {
  const int N = policy.grid().steps();
  if (static_cast<int>(states.x.size()) != N + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "filtered states and policy grids differ");
  }
  double worst = 0.0;
  for (int k = 0; k < N; ++k) {
    const double t = policy.grid().time(k);
    for (const Eigen::VectorXd& x : states.x[k]) {
      const ControlPair u = policy.Controls(k, x(1), x(2));
      for (int player = 1; player <= 2; ++player) {
        const double r = StationarityResidual(player, t, x(player), u[player],
                                              dynamics, costs[player - 1]);
        worst = std::max(worst, std::abs(r));
      }
    }
  }
  return worst;
}

ConsistencyReport FilterConsistencyCheck(const LqGameSpec& spec,
                                         const RiccatiSolution& riccati,
                                         const TreeNoise& tree) {
  if (!(riccati.grid == tree.grid())) {
    throw Error(ErrorCode::kInvalidArgument,
                "decoupling and tree grids differ");
  }
  const LinearFbsdeSystem sys = AssembleFilteringSystem(spec);
  const DecoupledDynamics dyn(riccati, sys);
  const EquilibriumPolicy policy = SynthesizeEquilibrium(riccati, spec);
  const PolicyOnTree on_tree = PolicyOnTree::FromEquilibrium(policy, dyn, tree);
  const TreeSolution sol = SolveOnTree(spec, on_tree, tree);
  const FilteredTreeStates states = RunFilteredOnTree(dyn, tree);

  ConsistencyReport report;
  for (int k = 0; k <= tree.steps(); ++k) {
    const std::vector<double> Y = FilterOnTree(sol.Y, k);
    const std::vector<double> y = FilterOnTree(sol.y, k);
    for (std::size_t prefix = 0; prefix < Y.size(); ++prefix) {
      report.max_error_Y = std::max(
          report.max_error_Y, std::abs(Y[prefix] - states.Y[k][prefix](0)));
      report.max_error_y = std::max(
          report.max_error_y, std::abs(y[prefix] - states.x[k][prefix](0)));
    }
  }
  return report;
}

double ObservedOrder(double error_coarse, double error_fine, int steps_coarse,
                     int steps_fine) {
  if (error_coarse == 0.0 && error_fine == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return std::log(error_coarse / error_fine) /
         std::log(static_cast<double>(steps_fine) / steps_coarse);
}

ConvergenceReport ConvergenceStudy(const LqGameSpec& spec,
                                   const std::vector<int>& steps) {
  if (steps.empty() || steps.back() > TreeNoise::kMaxSteps ||
      !std::is_sorted(steps.begin(), steps.end()) ||
      std::adjacent_find(steps.begin(), steps.end()) != steps.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "convergence study needs increasing depths up to 12");
  }
  const LinearFbsdeSystem sys = AssembleFilteringSystem(spec);
  ConvergenceReport report;
  {
    const RiccatiSolution fine = SolveDecoupling(sys, MakeGrid(spec.horizon, 512));
    report.reference_Y0 =
        (fine.P[0] * fine.x0 + fine.h0[0])(0);
  }
  for (int N : steps) {
    const TreeNoise tree = EnumerateTree(MakeGrid(spec.horizon, N));
    const RiccatiSolution ric = SolveDecoupling(sys, tree.grid());
    const EquilibriumPolicy policy = SynthesizeEquilibrium(ric, spec);
    const PolicyOnTree on_tree =
        PolicyOnTree::FromEquilibrium(policy, DecoupledDynamics(ric, sys), tree);
    const TreeSolution sol = SolveOnTree(spec, on_tree, tree);
    ConvergenceRow row;
    row.steps = N;
    row.Y0 = FilterOnTree(sol.Y, 0)[0];
    row.J1 = EvalCostOnTree(spec, 1, sol, on_tree, tree);
    row.J2 = EvalCostOnTree(spec, 2, sol, on_tree, tree);
    row.error_Y0 = std::abs(row.Y0 - report.reference_Y0);
    report.rows.push_back(row);
  }
  const ConvergenceRow& finest = report.rows.back();
  for (auto& row : report.rows) {
    row.error_J1 = std::abs(row.J1 - finest.J1);
    row.error_J2 = std::abs(row.J2 - finest.J2);
  }
  for (std::size_t n = 0; n + 1 < report.rows.size(); ++n) {
    const auto& a = report.rows[n];
    const auto& b = report.rows[n + 1];
    report.order_Y0.push_back(
        ObservedOrder(a.error_Y0, b.error_Y0, a.steps, b.steps));
    // The finest row has zero error by construction; skip it for J.
    if (n + 2 < report.rows.size()) {
      report.order_J1.push_back(
          ObservedOrder(a.error_J1, b.error_J1, a.steps, b.steps));
      report.order_J2.push_back(
          ObservedOrder(a.error_J2, b.error_J2, a.steps, b.steps));
    }
  }
  return report;
}

void ConvergenceReport::WriteCsv(std::ostream& out) const {
  out << "steps,Y0,J1,J2,error_Y0,error_J1,error_J2,order_Y0,order_J1,"
         "order_J2\n";
  const auto old_precision = out.precision(17);
  auto order = [](const std::vector<double>& v, std::size_t n) -> std::string {
    if (n == 0 || n - 1 >= v.size()) return "";
    if (std::isinf(v[n - 1])) return "exact";
    std::ostringstream s;
    s.precision(17);
    s << v[n - 1];
    return s.str();
  };
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& r = rows[n];
    out << r.steps << ',' << r.Y0 << ',' << r.J1 << ',' << r.J2 << ','
        << r.error_Y0 << ',' << r.error_J1 << ',' << r.error_J2 << ','
        << order(order_Y0, n) << ',' << order(order_J1, n) << ','
        << order(order_J2, n) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace fbdsde
