#pragma once

#include <array>
#include <optional>

#include "fbdsde/model.h"
#include "fbdsde/noise.h"
#include "fbdsde/types.h"

namespace fbdsde {

/// H = q f + qbar fbar - p g - pbar gbar + l for the linear dynamics and the
/// running payoff l = -1/2 (w_y y^2 + ... + w_v1 v1^2 + w_v2 v2^2) of `cost`.
double EvalHamiltonian(const GameDynamics& dynamics, const CostView& cost,
                       double t, const GameState& s, const ControlPair& c,
                       const AdjointState& a);

/// H_i of the nonzero-sum game, player i in {1, 2}.
double EvalHamiltonianNZ(int player, double t, const GameState& s,
                         const ControlPair& c, const AdjointState& a,
                         const LqGameSpec& spec);

/// H of the zero-sum game; its running payoff is the integrand of J.
double EvalHamiltonianZS(double t, const GameState& s, const ControlPair& c,
                         const AdjointState& a, const ZeroSumSpec& spec);

/// Same pairing evaluated through arbitrary coefficient callables.
double EvalHamiltonian(const GeneralCoefficients& coefficients, int player,
                       double t, const GameState& s, const ControlPair& c,
                       const AdjointState& a);

/// Coefficients of player i's adjoint system
///
///   dp  = (pY Y + pp p + pq q) dt + (pZ Z + sp p + sq q) dW - pbar d^B
///   -dq = (qy y + qq q) dt - (qz z) d^B - qbar dW
///   p(0) = initial_Y Y(0) + initial_q q(0),  q(T) = terminal_y y(T)
struct AdjointSystemDescription {
  CoefficientFn drift_Y, drift_p, drift_q;
  CoefficientFn diffusion_Z, diffusion_p, diffusion_q;
  CoefficientFn backward_y, backward_q, backward_noise_z;
  double initial_Y = 0.0;
  double initial_q = 0.0;
  double terminal_y = 0.0;

  /// True when no term involves the state (y, z, Y, Z), i.e. p = q = 0
  /// solves the system.
  bool HasZeroSources() const;
};

/// Throws kValidation if ValidateSpec(spec) is not empty.
std::array<AdjointSystemDescription, 2> AssembleAdjointSystem(
    const LqGameSpec& spec);
std::array<AdjointSystemDescription, 2> AssembleAdjointSystem(
    const GameDynamics& dynamics, const std::array<CostView, 2>& costs);

/// E[H_{i v_i} | E_t] in the LQ case, given the filtered adjoint p~_i.
double StationarityResidual(int player, double t, double filtered_p,
                            double control, const LqGameSpec& spec);
double StationarityResidual(int player, double t, double filtered_p,
                            double control, const GameDynamics& dynamics,
                            const CostView& own_cost);

struct ArrowReport {
  bool pass = true;
  // First violation, when !pass.
  int player = 0;
  int weight = 0;  // k of e_ik
  double time = 0.0;
};

/// Concavity of the LQ Hamiltonian in (y, z, Y, Z): e_i1..e_i4 >= 0 at every
/// grid node and e_i5, e_i6 >= 0.
ArrowReport ArrowConditionCheck(const LqGameSpec& spec, const TimeGrid& grid);

}  // namespace fbdsde
