#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fbdsde/filtering.h"
#include "fbdsde/model.h"
#include "fbdsde/noise.h"
#include "fbdsde/oracle.h"

namespace fbdsde {

/// A bounded W-adapted perturbation beta(t, W(t)) of one player's control.
struct Deviation {
  enum class Kind { kConstant, kSinusoid, kWFeedback };

  int player = 1;
  Kind kind = Kind::kConstant;
  double amplitude = 1.0;
  double frequency = 1.0;  // sinusoid only
  double phase = 0.0;      // sinusoid only

  double operator()(double t, double w) const;
  std::string Label() const;
};

using DeviationSet = std::vector<Deviation>;

/// Constants, sinusoids and W-feedback perturbations, `per_player` for each
/// player.
DeviationSet StandardDeviations(int per_player = 10);

/// Fixed symmetric step grid applied to every deviation.
inline constexpr std::array<double, 10> kEpsilonGrid = {
    -1.0, -0.5, -0.25, -0.1, -0.05, 0.05, 0.1, 0.25, 0.5, 1.0};

inline constexpr double kDefaultTolerance = 5e-3;

struct DeviationOutcome {
  int player = 1;
  std::size_t deviation = 0;
  std::string label;
  double eps = 0.0;
  double payoff = 0.0;  // J_player at the deviation
  double margin = 0.0;  // J_player(candidate) - payoff
  bool pass = true;
};

struct GameReport {
  std::array<double, 2> candidate_payoff{};  // J1, J2 at the candidate
  std::vector<DeviationOutcome> outcomes;
  double tolerance = kDefaultTolerance;
  double worst_margin = 0.0;
  bool zero_sum = false;
  bool pass = true;

  /// player,deviation,label,eps,J_candidate,J_deviation,margin,pass
  void WriteCsv(std::ostream& out) const;
  void WriteSummary(std::ostream& out) const;
};

/// Candidate controls on the tree: the equilibrium feedback run along the
/// filtered states of each W-prefix. Propagates decoupling breakdowns.
PolicyOnTree CandidateOnTree(const GameDynamics& dynamics,
                             const std::array<CostView, 2>& costs,
                             const EquilibriumPolicy& policy,
                             const TreeNoise& tree);

/// Unilateral deviations u_i + eps beta for every beta and every eps in
/// kEpsilonGrid; passes iff J_i(deviation) <= J_i(candidate) + tol.
GameReport NashCheck(const GameDynamics& dynamics,
                     const std::array<CostView, 2>& costs,
                     const PolicyOnTree& candidate, const DeviationSet& devs,
                     const TreeNoise& tree, double tol);
GameReport NashCheck(const LqGameSpec& spec, const EquilibriumPolicy& policy,
                     const DeviationSet& devs, const TreeNoise& tree,
                     double tol = kDefaultTolerance);

/// Central difference [J_i(u + eps beta) - J_i(u - eps beta)] / (2 eps).
double GateauxCheck(const GameDynamics& dynamics, const CostView& cost,
                    const PolicyOnTree& candidate, int player,
                    const Deviation& beta, const TreeNoise& tree, double eps);
double GateauxCheck(const LqGameSpec& spec, const EquilibriumPolicy& policy,
                    int player, const Deviation& beta, const TreeNoise& tree,
                    double eps);

/// Saddle inequalities J(u1, v2) <= J(u) + tol <= J(v1, u2) + 2 tol, checked
/// as the two unilateral checks on the views J1 = -J, J2 = J.
GameReport SaddleCheck(const ZeroSumSpec& spec, const EquilibriumPolicy& policy,
                       const DeviationSet& devs, const TreeNoise& tree,
                       double tol = kDefaultTolerance);

/// One member u + eps beta of a finite control family; no deviation means
/// the candidate itself.
struct FamilyMember {
  std::optional<Deviation> beta;
  double eps = 0.0;
};

struct MinimaxReport {
  double sup_inf = 0.0;  // max over v2 of min over v1 of J
  double inf_sup = 0.0;  // min over v1 of max over v2 of J
  double gap = 0.0;      // inf_sup - sup_inf
  double candidate_value = 0.0;
  bool candidate_in_family = true;
  std::vector<std::vector<double>> values;  // J[v1 member][v2 member]

  /// gap <= tol and sup_inf - tol <= J(u) <= inf_sup + tol.
  bool Passes(double tol) const;
};

/// Family-restricted min-max over the product of the two finite families.
MinimaxReport MinimaxGapCheck(const ZeroSumSpec& spec,
                              const EquilibriumPolicy& policy,
                              const std::vector<FamilyMember>& family1,
                              const std::vector<FamilyMember>& family2,
                              const TreeNoise& tree);

/// Candidate plus u + eps beta for each eps; with eps in {+-0.25, +-0.5} this
/// is the 5-member family per player.
std::vector<FamilyMember> MakeFamily(const Deviation& beta,
                                     const std::vector<double>& eps,
                                     bool include_candidate = true);

/// Largest |E[H_{i v_i} | E_t]| over both players, every step k < N and
/// every W-prefix, at the policy evaluated on the filtered adjoints.
double MaxStationarityResidual(const GameDynamics& dynamics,
                               const std::array<CostView, 2>& costs,
                               const EquilibriumPolicy& policy,
                               const FilteredTreeStates& states);

struct ConsistencyReport {
  double max_error_Y = 0.0;  // |E[Y_k | E_k] on tree - Y~_k|
  double max_error_y = 0.0;  // |E[y_k | E_k] on tree - y~_k|
  double max_error() const { return std::max(max_error_Y, max_error_y); }
};

/// Oracle at the Riccati policy against the filtered states driven by the
/// same W-prefixes, over every node of every level.
ConsistencyReport FilterConsistencyCheck(const LqGameSpec& spec,
                                         const RiccatiSolution& riccati,
                                         const TreeNoise& tree);

struct ConvergenceRow {
  int steps = 0;
  double Y0 = 0.0;  // E[Y_0] on the tree at the Riccati policy
  double J1 = 0.0;
  double J2 = 0.0;
  double error_Y0 = 0.0;  // against the reference value
  double error_J1 = 0.0;  // against the finest N
  double error_J2 = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double reference_Y0 = 0.0;  // fine-grid Riccati Y~(0)
  // Observed orders between consecutive rows; +inf marks exact (zero) errors.
  std::vector<double> order_Y0;
  std::vector<double> order_J1;
  std::vector<double> order_J2;

  /// steps,Y0,J1,J2,error_Y0,error_J1,error_J2,order_Y0,order_J1,order_J2
  void WriteCsv(std::ostream& out) const;
};

/// Ns must be increasing with max <= 12. Y0 errors use the fine-grid
/// Riccati value; J errors use the finest N.
ConvergenceReport ConvergenceStudy(const LqGameSpec& spec,
                                   const std::vector<int>& steps);

/// log(e_a / e_b) / log(N_b / N_a), +inf when both errors vanish.
double ObservedOrder(double error_coarse, double error_fine, int steps_coarse,
                     int steps_fine);

}  // namespace fbdsde
