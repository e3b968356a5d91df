#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fbdsde/filtering.h"
#include "fbdsde/model.h"
#include "fbdsde/noise.h"

namespace fbdsde {

/// An F_{t_k}-measurable process on the binary two-noise tree. A value at
/// step k depends on the W-prefix (dW_0..dW_{k-1}) and the B-suffix
/// (dB_k..dB_{N-1}) only, so each level stores 2^N numbers at
///
///   node = w_prefix | (b_suffix << k).
///
/// Bit k of a level-k node is the sign of dB_k; bit k of a level-(k+1) node
/// is the sign of dW_k.
class TreeProcess {
 public:
  explicit TreeProcess(int steps);

  int steps() const { return steps_; }
  std::uint64_t nodes() const { return std::uint64_t{1} << steps_; }

  double& at(int k, std::uint64_t node) { return levels_[k][node]; }
  double at(int k, std::uint64_t node) const { return levels_[k][node]; }
  std::span<const double> level(int k) const { return levels_[k]; }

  static std::uint64_t NodeOf(int k, std::uint64_t w, std::uint64_t b) {
    const std::uint64_t prefix_mask = (std::uint64_t{1} << k) - 1;
    return (w & prefix_mask) | ((b >> k) << k);
  }
  /// Value at step k in the full scenario (w, b).
  double AtScenario(int k, std::uint64_t w, std::uint64_t b) const {
    return levels_[k][NodeOf(k, w, b)];
  }

 private:
  int steps_;
  std::vector<std::vector<double>> levels_;
};

/// Filtered states along every W-prefix: x~ and Y~ at (k, w_prefix), with
/// 2^k prefixes at level k.
struct FilteredTreeStates {
  std::vector<std::vector<Eigen::VectorXd>> x;
  std::vector<std::vector<Eigen::VectorXd>> Y;
};

/// Runs the Euler forward pass of the decoupled filtered system along every
/// W-prefix of the tree.
FilteredTreeStates RunFilteredOnTree(const DecoupledDynamics& dynamics,
                                     const TreeNoise& tree);

/// Controls on the tree, one value per (k, node) for k = 0..N-1.
class PolicyOnTree {
 public:
  using Rule = std::function<double(int k, double t, double w)>;

  /// u = 0 everywhere.
  explicit PolicyOnTree(const TreeNoise& tree);

  /// Equilibrium feedback evaluated on the filtered states of each prefix.
  static PolicyOnTree FromEquilibrium(const EquilibriumPolicy& policy,
                                      const DecoupledDynamics& dynamics,
                                      const TreeNoise& tree);
  /// Open-loop or W-feedback rule u_i(t_k, W(t_k)).
  static PolicyOnTree FromRules(const TreeNoise& tree, const Rule& u1,
                                const Rule& u2);

  int steps() const { return u_[0].steps(); }
  double control(int player, int k, std::uint64_t node) const {
    return u_[player - 1].at(k, node);
  }
  double& control(int player, int k, std::uint64_t node) {
    return u_[player - 1].at(k, node);
  }
  const TreeProcess& process(int player) const { return u_[player - 1]; }

  /// Copy with u_player + eps * beta(k, t_k, W(t_k)).
  PolicyOnTree Perturbed(const TreeNoise& tree, int player, double eps,
                         const Rule& beta) const;

  /// True when every control ignores the B-suffix.
  bool IsWAdapted() const;

 private:
  std::array<TreeProcess, 2> u_;
};

struct TreeSolution {
  TreeProcess Y, Z, y, z;
};

/// Backward recursion for (Y, Z) from Y_N = kappa0 + kappa1 W(T):
///   EY  = (Y_{k+1}(+) + Y_{k+1}(-)) / 2 over dW_k,
///   Z_k = (Y_{k+1}(+) - Y_{k+1}(-)) / (2 sqrt(dt)),
///   Y_k = EY + dt (a0 + a1 EY + a2 Z_k + a3 u1 + a4 u2) + b0(t_{k+1}) dB_k.
void SolveBackwardOnTree(const GameDynamics& dynamics,
                         const PolicyOnTree& policy, const TreeNoise& tree,
                         TreeProcess& Y, TreeProcess& Z);

/// Forward recursion for (y, z) from y_0 = M Y_0, averaging out dB_k:
///   S = y_k + dt (c0 + c1 y_k + c2 Y_k + c3 Z_k) + d0(t_k) dW_k,
///   y_{k+1} = (S(+) + S(-)) / 2,  z_k = (S(+) - S(-)) / (2 sqrt(dt)).
/// z_k is stored at level k and does not depend on dB_k.
void SolveForwardOnTree(const GameDynamics& dynamics, const TreeProcess& Y,
                        const TreeProcess& Z, const TreeNoise& tree,
                        TreeProcess& y, TreeProcess& z);

/// Both passes; throws kInvalidArgument when spec.info is the W-filtration
/// and the policy depends on B.
TreeSolution SolveOnTree(const GameDynamics& dynamics,
                         const PolicyOnTree& policy, const TreeNoise& tree);

/// Exact expectation of the quadratic payoff on the tree, left-endpoint
/// quadrature in time.
double EvalCostOnTree(const CostView& cost, const TreeSolution& solution,
                      const PolicyOnTree& policy, const TreeNoise& tree);
double EvalCostOnTree(const LqGameSpec& spec, int player,
                      const TreeSolution& solution, const PolicyOnTree& policy,
                      const TreeNoise& tree);

/// E[proc_k | E_{t_k}] for every W-prefix of length k (2^k values).
std::vector<double> FilterOnTree(const TreeProcess& proc, int k);

/// CSV dump of every node: k,node,w_prefix,b_suffix,W,y,z,Y,Z,u1,u2.
/// Refuses trees deeper than 6 steps.
void WriteNodeDump(const TreeSolution& solution, const PolicyOnTree& policy,
                   const TreeNoise& tree, std::ostream& out);

}  // namespace fbdsde
