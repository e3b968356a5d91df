#pragma once

namespace fbdsde {

/// Forward pair (y, z) and backward pair (Y, Z) at one instant.
struct GameState {
  double y = 0.0;
  double z = 0.0;
  double Y = 0.0;
  double Z = 0.0;
};

/// Adjoint processes (p, pbar, q, qbar) at one instant.
struct AdjointState {
  double p = 0.0;
  double pbar = 0.0;
  double q = 0.0;
  double qbar = 0.0;
};

struct ControlPair {
  double v1 = 0.0;
  double v2 = 0.0;

  double operator[](int player) const { return player == 1 ? v1 : v2; }
};

}  // namespace fbdsde
