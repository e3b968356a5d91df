#include "fbdsde/hamiltonian.h"

#include "fbdsde/error.h"

namespace fbdsde {

double EvalHamiltonian(const GameDynamics& d, const CostView& cost, double t,
                       const GameState& s, const ControlPair& c,
                       const AdjointState& a) {
  const double forward_drift =
      d.c0(t) + d.c1(t) * s.y + d.c2(t) * s.Y + d.c3(t) * s.Z;
  const double backward_drift = d.a0(t) + d.a1(t) * s.Y + d.a2(t) * s.Z +
                                d.a3(t) * c.v1 + d.a4(t) * c.v2;
  const double running =
      -0.5 * (cost.state[0](t) * s.y * s.y + cost.state[1](t) * s.z * s.z +
              cost.state[2](t) * s.Y * s.Y + cost.state[3](t) * s.Z * s.Z +
              cost.control[0](t) * c.v1 * c.v1 +
              cost.control[1](t) * c.v2 * c.v2);
  return a.q * forward_drift + a.qbar * d.d0(t) - a.p * backward_drift -
         a.pbar * d.b0(t) + running;
}

double EvalHamiltonianNZ(int player, double t, const GameState& s,
                         const ControlPair& c, const AdjointState& a,
                         const LqGameSpec& spec) {
  if (player != 1 && player != 2) {
    throw Error(ErrorCode::kInvalidArgument, "player must be 1 or 2");
  }
  return EvalHamiltonian(spec, PlayerCost(spec, player), t, s, c, a);
}

double EvalHamiltonianZS(double t, const GameState& s, const ControlPair& c,
                         const AdjointState& a, const ZeroSumSpec& spec) {
  return EvalHamiltonian(spec, ToZeroSum(spec).player2, t, s, c, a);
}

double EvalHamiltonian(const GeneralCoefficients& gc, int player, double t,
                       const GameState& s, const ControlPair& c,
                       const AdjointState& a) {
  return a.q * gc.f(t, s, c) + a.qbar * gc.fbar(t, s, c) -
         a.p * gc.g(t, s, c) - a.pbar * gc.gbar(t, s, c) +
         gc.l[player - 1](t, s, c);
}

bool AdjointSystemDescription::HasZeroSources() const {
  return drift_Y.IsIdenticallyZero() && diffusion_Z.IsIdenticallyZero() &&
         backward_y.IsIdenticallyZero() &&
         backward_noise_z.IsIdenticallyZero() && initial_Y == 0.0 &&
         terminal_y == 0.0;
}

std::array<AdjointSystemDescription, 2> AssembleAdjointSystem(
    const GameDynamics& d, const std::array<CostView, 2>& costs) {
  std::array<AdjointSystemDescription, 2> out;
  for (int i = 0; i < 2; ++i) {
    const CostView& w = costs[i];
    AdjointSystemDescription& sys = out[i];
    // Drift of p is -H_Y, diffusion -H_Z; drift of -q is H_y, d^B part H_z.
    sys.drift_Y = w.state[2];
    sys.drift_p = d.a1;
    sys.drift_q = d.c2.Scaled(-1.0);
    sys.diffusion_Z = w.state[3];
    sys.diffusion_p = d.a2;
    sys.diffusion_q = d.c3.Scaled(-1.0);
    sys.backward_y = w.state[0].Scaled(-1.0);
    sys.backward_q = d.c1;
    sys.backward_noise_z = w.state[1];
    sys.initial_Y = w.initial_Y;
    sys.initial_q = -d.M;
    sys.terminal_y = -w.terminal_y;
  }
  return out;
}

std::array<AdjointSystemDescription, 2> AssembleAdjointSystem(
    const LqGameSpec& spec) {
  const auto report = ValidateSpec(spec);
  if (!report.ok()) {
    throw Error(ErrorCode::kValidation,
                "adjoint assembly needs a valid spec: " +
                    report.violations.front());
  }
  return AssembleAdjointSystem(spec, {PlayerCost(spec, 1), PlayerCost(spec, 2)});
}

double StationarityResidual(int player, double t, double filtered_p,
                            double control, const GameDynamics& d,
                            const CostView& own_cost) {
  const double channel = player == 1 ? d.a3(t) : d.a4(t);
  return -channel * filtered_p - own_cost.control[player - 1](t) * control;
}

double StationarityResidual(int player, double t, double filtered_p,
                            double control, const LqGameSpec& spec) {
  if (player != 1 && player != 2) {
    throw Error(ErrorCode::kInvalidArgument, "player must be 1 or 2");
  }
  return StationarityResidual(player, t, filtered_p, control, spec,
                              PlayerCost(spec, player));
}

ArrowReport ArrowConditionCheck(const LqGameSpec& spec, const TimeGrid& grid) {
  for (int i = 1; i <= 2; ++i) {
    for (int k = 1; k <= 6; ++k) {
      if (k >= 5) {
        const double value = spec.weight(i, k)(k == 5 ? spec.horizon : 0.0);
        if (value < 0.0) {
          return {false, i, k, k == 5 ? spec.horizon : 0.0};
        }
        continue;
      }
      for (int n = 0; n <= grid.steps(); ++n) {
        const double t = grid.time(n);
        if (spec.weight(i, k)(t) < 0.0) return {false, i, k, t};
      }
    }
  }
  return {};
}

}  // namespace fbdsde
