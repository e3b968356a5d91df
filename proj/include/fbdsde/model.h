#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "fbdsde/coefficient.h"
#include "fbdsde/types.h"

namespace fbdsde {

/// Terminal value of the backward state, affine in the terminal W:
/// xi = kappa0 + kappa1 * W(T).
struct TerminalCondition {
  double kappa0 = 0.0;
  double kappa1 = 0.0;

  double operator()(double w_terminal) const {
    return kappa0 + kappa1 * w_terminal;
  }
  bool operator==(const TerminalCondition&) const = default;
};

enum class InfoStructure {
  kWFiltration,  // controls adapted to the filtration generated by W
  kFull,         // controls adapted to the full mixed filtration
};

/// Coefficients of the controlled system
///
///   -dY = [a0 + a1 Y + a2 Z + a3 v1 + a4 v2] dt + b0 d^B - Z dW,  Y(T) = xi
///    dy = [c0 + c1 y + c2 Y + c3 Z] dt + d0 dW - z d^B,          y(0) = M Y(0)
///
/// where d^B is the backward Ito integral.
struct GameDynamics {
  double horizon = 1.0;
  CoefficientFn a0, a1, a2, a3, a4;
  CoefficientFn b0;
  CoefficientFn c0, c1, c2, c3;
  CoefficientFn d0;
  double M = 1.0;
  TerminalCondition terminal;
  InfoStructure info = InfoStructure::kWFiltration;

  bool operator==(const GameDynamics&) const = default;
};

/// Nonzero-sum game: player i maximizes
///   J_i = -1/2 E[ int (e_i1 y^2 + e_i2 z^2 + e_i3 Y^2 + e_i4 Z^2 + e_i7 v_i^2) dt
///                 + e_i5 y(T)^2 + e_i6 Y(0)^2 ].
struct LqGameSpec : GameDynamics {
  // e[i - 1][k - 1] holds e_ik; e_i5 and e_i6 must be constants.
  std::array<std::array<CoefficientFn, 7>, 2> e;

  const CoefficientFn& weight(int player, int k) const {
    return e[player - 1][k - 1];
  }
  CoefficientFn& weight(int player, int k) { return e[player - 1][k - 1]; }

  bool operator==(const LqGameSpec&) const = default;
};

/// Zero-sum game with the single functional
///   J = 1/2 E[ int (l1 y^2 + l2 z^2 + l3 Y^2 + l4 Z^2 + r1 v1^2 - r2 v2^2) dt
///              + l5 y(T)^2 + l6 Y(0)^2 ],
/// minimized by player 1 and maximized by player 2 (J1 = -J, J2 = J).
struct ZeroSumSpec : GameDynamics {
  std::array<CoefficientFn, 6> l;  // l[k - 1] holds l_k; l5, l6 constants
  CoefficientFn r1 = 1.0;
  CoefficientFn r2 = 1.0;

  bool operator==(const ZeroSumSpec&) const = default;
};

/// A quadratic payoff in the common normal form
///   J = -1/2 E[ int (w_y y^2 + w_z z^2 + w_Y Y^2 + w_Z Z^2
///                    + w_v1 v1^2 + w_v2 v2^2) dt
///               + w_T y(T)^2 + w_0 Y(0)^2 ].
/// Weights may be negative (zero-sum views).
struct CostView {
  std::array<CoefficientFn, 4> state;    // y, z, Y, Z
  std::array<CoefficientFn, 2> control;  // v1, v2
  double terminal_y = 0.0;
  double initial_Y = 0.0;
};

/// Payoff of `player` (1 or 2) in a nonzero-sum spec.
CostView PlayerCost(const LqGameSpec& spec, int player);

struct ZeroSumViews {
  CostView player1;  // J1 = -J
  CostView player2;  // J2 = J
};

/// The two signed payoffs J1 = -J, J2 = J used by the nonzero-sum machinery.
ZeroSumViews ToZeroSum(const ZeroSumSpec& spec);

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  bool Contains(const std::string& fragment) const;
};

ValidationReport ValidateSpec(const LqGameSpec& spec);
ValidationReport ValidateSpec(const ZeroSumSpec& spec);

enum class ReductionTarget { kBdsde, kBsde, kFbsde };

/// Zeroes the coefficients that the target class lacks: kBsde drops b0 and
/// the forward equation, kBdsde drops the forward equation, kFbsde drops b0.
LqGameSpec ReduceSpec(const LqGameSpec& spec, ReductionTarget target);
bool MatchesShape(const LqGameSpec& spec, ReductionTarget target);

/// General (possibly nonlinear) coefficient mappings, for pointwise
/// Hamiltonian evaluation only.
struct GeneralCoefficients {
  using Driver =
      std::function<double(double t, const GameState&, const ControlPair&)>;

  Driver f;     // forward drift
  Driver fbar;  // forward dW coefficient
  Driver g;     // backward drift (-dY = g dt + ...)
  Driver gbar;  // backward d^B coefficient
  std::function<double(double Y0)> phi;  // y(0) = phi(Y(0))
  std::array<Driver, 2> l;               // running payoffs l_1, l_2
  std::array<std::function<double(double yT)>, 2> gamma;  // terminal payoffs
  std::array<std::function<double(double Y0)>, 2> phi_payoff;  // initial
};

GeneralCoefficients LinearQuadraticCoefficients(const LqGameSpec& spec);

}  // namespace fbdsde
