#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fbdsde/model.h"
#include "fbdsde/noise.h"

namespace fbdsde {

/// Linear forward-backward system in n dimensions
///
///   dx = (F_xx x + F_xY Y + F_xZ Z + f_x) dt + (G_xx x + G_xY Y + G_xZ Z + g_x) dW
///   dY = (F_Yx x + F_YY Y + F_YZ Z + f_Y) dt + Z dW
///   Y(T) = G_T x(T) + (kappa0 + kappa1 W(T)) e_1,   x(0) = K Y(0).
///
/// For the game, x = (y~, p~1, p~2), Y = (Y~, q~1, q~2) and
/// Z = (Z~, qbar~1, qbar~2) are conditional expectations given E_t.
struct LinearFbsdeSystem {
  using MatrixFn = std::function<Eigen::MatrixXd(double)>;
  using VectorFn = std::function<Eigen::VectorXd(double)>;

  /// Every block identically zero, G_T = 0, K = 0, kappa = 0.
  static LinearFbsdeSystem Zero(int dimension);

  int dimension = 0;
  MatrixFn F_xx, F_xY, F_xZ;
  MatrixFn G_xx, G_xY, G_xZ;
  MatrixFn F_Yx, F_YY, F_YZ;
  VectorFn f_x, g_x, f_Y;
  Eigen::MatrixXd G_T;
  Eigen::MatrixXd K;
  double kappa0 = 0.0;
  double kappa1 = 0.0;
};

/// Throws kValidation for an invalid spec and kUnsupportedConfiguration
/// when spec.info is kFull.
LinearFbsdeSystem AssembleFilteringSystem(const LqGameSpec& spec);
/// Zero-sum instance through its J1 = -J, J2 = J views.
LinearFbsdeSystem AssembleFilteringSystem(const ZeroSumSpec& spec);
/// Unchecked assembly; costs[i] supplies player i+1's weights.
LinearFbsdeSystem AssembleFilteringSystem(const GameDynamics& dynamics,
                                          const std::array<CostView, 2>& costs);

struct DecouplingOptions {
  double condition_limit = 1e12;
  double blowup_limit = 1e8;
};

struct DecouplingDiagnostics {
  double max_lambda_condition = 1.0;  // cond(I - P G_xZ) over all RK stages
  double initial_condition = 1.0;     // cond(I - K P(0))
  double max_abs_P = 0.0;
};

/// Decoupling field Y = P x + h0 + h1 W on the grid nodes.
struct RiccatiSolution {
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> P;
  std::vector<Eigen::VectorXd> h0;
  std::vector<Eigen::VectorXd> h1;
  Eigen::VectorXd x0;
  DecouplingDiagnostics diagnostics;
};

/// Backward RK4 for (P, h1, h0) from P(T) = G_T, h1(T) = kappa1 e1,
/// h0(T) = kappa0 e1, then x0 from (I - K P(0)) x0 = K h0(0).
///
/// Throws kDecouplingBreakdown when I - P G_xZ or I - K P(0) has condition
/// number above the limit, kRiccatiBlowup when some |P_ij| exceeds the limit.
RiccatiSolution SolveDecoupling(const LinearFbsdeSystem& system,
                                const TimeGrid& grid,
                                const DecouplingOptions& options = {});

/// The decoupled dynamics tabulated on the grid: given x at t_k and W(t_k),
/// the backward pair is Y = P x + h0 + h1 W and Z = Zx x + ZW W + Z0, and the
/// forward state advances by an Euler-Maruyama step.
class DecoupledDynamics {
 public:
  DecoupledDynamics(const RiccatiSolution& riccati,
                    const LinearFbsdeSystem& system);

  const TimeGrid& grid() const { return grid_; }
  int dimension() const { return dimension_; }
  const Eigen::VectorXd& initial_state() const { return x0_; }

  Eigen::VectorXd Backward(int k, const Eigen::VectorXd& x, double w) const;
  Eigen::VectorXd Martingale(int k, const Eigen::VectorXd& x, double w) const;
  Eigen::VectorXd Step(int k, const Eigen::VectorXd& x, double w,
                       double dw) const;
  /// Drift of dY at t_k.
  Eigen::VectorXd BackwardDrift(int k, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& Y,
                                const Eigen::VectorXd& Z) const;

 private:
  struct Node {
    Eigen::MatrixXd P, Zx;
    Eigen::VectorXd h0, h1, ZW, Z0;
    // x drift = Ax x + AW w + A0, diffusion = Bx x + BW w + B0.
    Eigen::MatrixXd Ax, Bx;
    Eigen::VectorXd AW, A0, BW, B0;
    Eigen::MatrixXd F_Yx, F_YY, F_YZ;
    Eigen::VectorXd f_Y;
  };

  TimeGrid grid_;
  int dimension_;
  Eigen::VectorXd x0_;
  std::vector<Node> nodes_;
};

/// Per-path trajectories of the filtered system; index (path, k) with
/// k = 0..N.
class FilteredTrajectories {
 public:
  FilteredTrajectories(int paths, int steps, int dimension);

  int paths() const { return paths_; }
  int steps() const { return steps_; }
  int dimension() const { return dimension_; }

  Eigen::Map<Eigen::VectorXd> x(int path, int k) { return Slot(x_, path, k); }
  Eigen::Map<Eigen::VectorXd> Y(int path, int k) { return Slot(Y_, path, k); }
  Eigen::Map<Eigen::VectorXd> Z(int path, int k) { return Slot(Z_, path, k); }
  double& W(int path, int k) { return W_[Offset(path, k)]; }

  Eigen::Map<const Eigen::VectorXd> x(int path, int k) const {
    return Slot(x_, path, k);
  }
  Eigen::Map<const Eigen::VectorXd> Y(int path, int k) const {
    return Slot(Y_, path, k);
  }
  Eigen::Map<const Eigen::VectorXd> Z(int path, int k) const {
    return Slot(Z_, path, k);
  }
  double W(int path, int k) const { return W_[Offset(path, k)]; }

 private:
  std::size_t Offset(int path, int k) const {
    return static_cast<std::size_t>(path) * (steps_ + 1) + k;
  }
  Eigen::Map<Eigen::VectorXd> Slot(std::vector<double>& v, int path, int k) {
    return {v.data() + Offset(path, k) * dimension_, dimension_};
  }
  Eigen::Map<const Eigen::VectorXd> Slot(const std::vector<double>& v, int path,
                                         int k) const {
    return {v.data() + Offset(path, k) * dimension_, dimension_};
  }

  int paths_, steps_, dimension_;
  std::vector<double> x_, Y_, Z_, W_;
};

/// Euler-Maruyama forward pass with the decoupling substituted.
FilteredTrajectories SimulateFiltered(const RiccatiSolution& riccati,
                                      const LinearFbsdeSystem& system,
                                      const PathEnsemble& paths);

/// u_i = gain_i(t_k) p~_i + offset_i(t_k) on the grid nodes. The synthesized
/// equilibrium has gain_1 = -a3 / e17, gain_2 = -a4 / e27 and zero offsets.
class EquilibriumPolicy {
 public:
  EquilibriumPolicy(TimeGrid grid, std::array<std::vector<double>, 2> gains,
                    std::array<std::vector<double>, 2> offsets);

  const TimeGrid& grid() const { return grid_; }
  double gain(int player, int k) const { return gains_[player - 1][k]; }
  double offset(int player, int k) const { return offsets_[player - 1][k]; }

  ControlPair Controls(int k, double filtered_p1, double filtered_p2) const;

  /// Copy with `shift` added to player's offset at every node.
  EquilibriumPolicy Shifted(int player, double shift) const;

  /// CSV: k,t,gain1,gain2,offset1,offset2
  void WriteCsv(std::ostream& out) const;
  static EquilibriumPolicy ReadCsv(std::istream& in, const TimeGrid& grid);

 private:
  TimeGrid grid_;
  std::array<std::vector<double>, 2> gains_;
  std::array<std::vector<double>, 2> offsets_;
};

EquilibriumPolicy SynthesizeEquilibrium(const RiccatiSolution& riccati,
                                        const LqGameSpec& spec);
EquilibriumPolicy SynthesizeEquilibrium(const TimeGrid& grid,
                                        const GameDynamics& dynamics,
                                        const std::array<CostView, 2>& costs);

struct ResidualStats {
  double max_abs = 0.0;          // max over paths, steps, components of |r_k|
  double step_rms = 0.0;         // RMS of the one-step residual r_k
  double accumulated_rms = 0.0;  // RMS of R_k = sum_{j<k} r_j, k = 1..N
};

/// One-step residual of the backward dynamics along simulated paths,
///   r_k = Y_{k+1} - Y_k - drift_k dt - Z_k dW_k,
/// with Y and Z reconstructed from the decoupling.
ResidualStats DecouplingResidual(const RiccatiSolution& riccati,
                                 const LinearFbsdeSystem& system,
                                 const PathEnsemble& paths);

}  // namespace fbdsde
