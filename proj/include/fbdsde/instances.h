#pragma once

#include "fbdsde/filtering.h"
#include "fbdsde/model.h"

namespace fbdsde {

/// Reference nonzero-sum instance: time-varying a1 and b0, W-filtration,
/// random terminal. Also shipped as specs/spec_a.txt.
LqGameSpec SpecA();

/// Reference zero-sum instance. Also shipped as specs/spec_z.txt.
ZeroSumSpec SpecZ();

/// a1 = 1, xi = 1, T = 1, everything else zero: Y(0) = e.
LqGameSpec ExponentialSpec();

/// Zero dynamics, xi = 1, M = 1, all weights 1, T = 1: J_i = -2.
LqGameSpec AllConstantSpec();

/// Zero-sum instance with no state cost, xi = 0 and mirrored controls, whose
/// saddle point is u = 0.
ZeroSumSpec SymmetricZeroSumSpec();

/// One-dimensional dx = Y dt, dY = Z dW, Y(T) = 0.5 x(T): P(t) = 1 / (1 + t).
LinearFbsdeSystem ScalarRiccatiSystem();

}  // namespace fbdsde
