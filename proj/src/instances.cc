#include "fbdsde/instances.h"

namespace fbdsde {

namespace {

void SetSharedDynamics(GameDynamics& g) {
  g.horizon = 1.0;
  g.info = InfoStructure::kWFiltration;
  g.M = 0.5;
  g.terminal = {1.0, 0.5};
  g.a0 = 0.1;
  g.a1 = CoefficientFn::Polynomial({0.2, -0.1});
  g.a2 = 0.3;
  g.a3 = 0.8;
  g.a4 = 0.6;
  g.b0 = CoefficientFn::Piecewise({{0.0, 0.3}, {0.5, 0.2}});
  g.c0 = 0.05;
  g.c1 = -0.2;
  g.c2 = 0.4;
  g.c3 = 0.2;
  g.d0 = 0.3;
}

}  // namespace

LqGameSpec SpecA() {
  LqGameSpec spec;
  SetSharedDynamics(spec);
  const std::array<double, 7> e1 = {1.0, 0.5, 0.3, 0.2, 1.0, 0.5, 1.0};
  const std::array<double, 7> e2 = {0.5, 0.2, 0.6, 0.1, 0.8, 0.3, 1.5};
  for (int k = 0; k < 7; ++k) {
    spec.e[0][k] = e1[k];
    spec.e[1][k] = e2[k];
  }
  return spec;
}

ZeroSumSpec SpecZ() {
  ZeroSumSpec spec;
  SetSharedDynamics(spec);
  spec.l = {0.3, 0.2, 0.2, 0.1, 0.5, 0.2};
  spec.r1 = 1.0;
  spec.r2 = 2.0;
  return spec;
}

LqGameSpec ExponentialSpec() {
  LqGameSpec spec;
  spec.horizon = 1.0;
  // M must be nonzero; with a3 = a4 = 0 it never reaches Y.
  spec.M = 1.0;
  spec.a1 = 1.0;
  spec.terminal = {1.0, 0.0};
  for (auto& player : spec.e) player[6] = 1.0;
  return spec;
}

LqGameSpec AllConstantSpec() {
  LqGameSpec spec;
  spec.horizon = 1.0;
  spec.M = 1.0;
  spec.terminal = {1.0, 0.0};
  for (auto& player : spec.e) {
    for (auto& w : player) w = 1.0;
  }
  return spec;
}

ZeroSumSpec SymmetricZeroSumSpec() {
  ZeroSumSpec spec;
  spec.horizon = 1.0;
  spec.M = 0.5;
  spec.terminal = {0.0, 0.0};
  spec.a1 = 0.2;
  spec.a3 = 1.0;
  spec.a4 = -1.0;
  spec.c1 = -0.2;
  spec.c2 = 0.4;
  spec.l = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  spec.r1 = 1.0;
  spec.r2 = 1.0;
  return spec;
}

LinearFbsdeSystem ScalarRiccatiSystem() {
  LinearFbsdeSystem sys = LinearFbsdeSystem::Zero(1);
  sys.F_xY = [](double) { return Eigen::MatrixXd::Ones(1, 1); };
  sys.G_T = Eigen::MatrixXd::Constant(1, 1, 0.5);
  return sys;
}

}  // namespace fbdsde
