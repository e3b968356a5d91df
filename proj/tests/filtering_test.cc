#include "fbdsde/filtering.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "fbdsde/error.h"
#include "fbdsde/hamiltonian.h"
#include "fbdsde/instances.h"
#include "fbdsde/oracle.h"
#include "fbdsde/parallel.h"

namespace fbdsde {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(AssembleFilteringSystem, ZeroCoefficientsLeaveOnlyK) {
  LqGameSpec spec;
  spec.M = 1.0;
  spec.weight(1, 7) = 1.0;  // control weights must stay positive
  spec.weight(2, 7) = 1.0;
  const LinearFbsdeSystem sys = AssembleFilteringSystem(spec);
  ASSERT_EQ(sys.dimension, 3);
  for (double t : {0.0, 0.5, 1.0}) {
    for (const auto* fn : {&sys.F_xx, &sys.F_xY, &sys.F_xZ, &sys.G_xx,
                           &sys.G_xY, &sys.G_xZ, &sys.F_Yx, &sys.F_YY,
                           &sys.F_YZ}) {
      EXPECT_TRUE((*fn)(t).isZero(0.0));
    }
    EXPECT_TRUE(sys.f_x(t).isZero(0.0));
    EXPECT_TRUE(sys.g_x(t).isZero(0.0));
    EXPECT_TRUE(sys.f_Y(t).isZero(0.0));
  }
  EXPECT_TRUE(sys.G_T.isZero(0.0));
  EXPECT_EQ(sys.K, VectorXd::Map(std::array{1.0, -1.0, -1.0}.data(), 3)
                       .asDiagonal()
                       .toDenseMatrix());
}

struct BlockFixture {
  std::map<double, std::map<std::string, std::vector<double>>> at_time;
  std::map<std::string, std::vector<double>> constant;
};

BlockFixture LoadFixture() {
  std::ifstream in(std::string(FBDSDE_SOURCE_DIR) +
                   "/tests/data/spec_a_blocks.txt");
  EXPECT_TRUE(in.good());
  BlockFixture fx;
  std::map<std::string, std::vector<double>>* current = nullptr;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string name;
    row >> name;
    if (name == "t") {
      double t;
      row >> t;
      current = &fx.at_time[t];
      continue;
    }
    if (name == "constant") {
      current = &fx.constant;
      continue;
    }
    std::vector<double> values;
    for (double v; row >> v;) values.push_back(v);
    (*current)[name] = values;
  }
  return fx;
}

void ExpectBlock(const MatrixXd& m, const std::vector<double>& v,
                 const std::string& name) {
  ASSERT_EQ(v.size(), static_cast<std::size_t>(m.size())) << name;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      EXPECT_NEAR(m(r, c), v[r * m.cols() + c], 1e-15) << name << '(' << r
                                                        << ',' << c << ')';
    }
  }
}

TEST(AssembleFilteringSystem, ReferenceInstanceMatchesTranscription) {
  const BlockFixture fx = LoadFixture();
  const LinearFbsdeSystem sys = AssembleFilteringSystem(SpecA());
  ASSERT_EQ(fx.at_time.size(), 2u);
  const std::map<std::string, LinearFbsdeSystem::MatrixFn> matrices = {
      {"F_xx", sys.F_xx}, {"F_xY", sys.F_xY}, {"F_xZ", sys.F_xZ},
      {"G_xx", sys.G_xx}, {"G_xY", sys.G_xY}, {"G_xZ", sys.G_xZ},
      {"F_Yx", sys.F_Yx}, {"F_YY", sys.F_YY}, {"F_YZ", sys.F_YZ}};
  const std::map<std::string, LinearFbsdeSystem::VectorFn> vectors = {
      {"f_x", sys.f_x}, {"g_x", sys.g_x}, {"f_Y", sys.f_Y}};
  for (const auto& [t, blocks] : fx.at_time) {
    EXPECT_EQ(blocks.size(), 12u);
    for (const auto& [name, values] : blocks) {
      if (matrices.count(name)) {
        ExpectBlock(matrices.at(name)(t), values, name);
      } else {
        ExpectBlock(vectors.at(name)(t), values, name);
      }
    }
  }
  ExpectBlock(sys.G_T, fx.constant.at("G_T"), "G_T");
  ExpectBlock(sys.K, fx.constant.at("K"), "K");
  EXPECT_EQ(sys.kappa0, fx.constant.at("kappa")[0]);
  EXPECT_EQ(sys.kappa1, fx.constant.at("kappa")[1]);
}

TEST(AssembleFilteringSystem, Errors) {
  LqGameSpec full = SpecA();
  full.info = InfoStructure::kFull;
  EXPECT_EQ(CodeOf([&] { AssembleFilteringSystem(full); }),
            ErrorCode::kUnsupportedConfiguration);
  LqGameSpec bad = SpecA();
  bad.weight(2, 7) = 0.0;
  EXPECT_EQ(CodeOf([&] { AssembleFilteringSystem(bad); }),
            ErrorCode::kValidation);
}

TEST(SolveDecoupling, NoZFeedbackMeansIdentityLambda) {
  LqGameSpec spec = SpecA();
  spec.weight(1, 4) = 0.0;
  spec.weight(2, 4) = 0.0;
  const LinearFbsdeSystem sys = AssembleFilteringSystem(spec);
  EXPECT_TRUE(sys.G_xZ(0.4).isZero(0.0));
  const RiccatiSolution ric = SolveDecoupling(sys, MakeGrid(1.0, 32));
  EXPECT_EQ(ric.diagnostics.max_lambda_condition, 1.0);
}

TEST(SolveDecoupling, HomogeneousSystem) {
  LinearFbsdeSystem sys = LinearFbsdeSystem::Zero(3);
  sys.kappa0 = 1.0;
  sys.K = VectorXd::Map(std::array{1.0, -1.0, -1.0}.data(), 3)
              .asDiagonal()
              .toDenseMatrix();
  const RiccatiSolution ric = SolveDecoupling(sys, MakeGrid(1.0, 10));
  const VectorXd e1 = VectorXd::Unit(3, 0);
  for (int k = 0; k <= 10; ++k) {
    EXPECT_TRUE(ric.P[k].isZero(0.0));
    EXPECT_TRUE(ric.h1[k].isZero(0.0));
    EXPECT_EQ(ric.h0[k], e1);
  }
  EXPECT_EQ(ric.x0, sys.K * e1);
}

TEST(SolveDecoupling, TerminalValuesAreAssigned) {
  const LinearFbsdeSystem sys = AssembleFilteringSystem(SpecA());
  const RiccatiSolution ric = SolveDecoupling(sys, MakeGrid(1.0, 16));
  EXPECT_EQ(ric.P.back(), sys.G_T);
  EXPECT_EQ(ric.h1.back(), 0.5 * VectorXd::Unit(3, 0));
  EXPECT_EQ(ric.h0.back(), 1.0 * VectorXd::Unit(3, 0));
}

// dx = Y dt, Y = P x: P' = -P^2, P(1) = 1/2, so P(t) = 1 / (1 + t).
TEST(SolveDecoupling, ScalarClosedForm) {
  const RiccatiSolution ric =
      SolveDecoupling(ScalarRiccatiSystem(), MakeGrid(1.0, 64));
  for (int k = 0; k <= 64; ++k) {
    const double t = ric.grid.time(k);
    EXPECT_NEAR(ric.P[k](0, 0), 0.5 / (1.0 - 0.5 * (1.0 - t)), 1e-8);
  }
  EXPECT_NEAR(ric.P[0](0, 0), 1.0, 1e-8);
}

TEST(SolveDecoupling, ExponentialOffset) {
  const LinearFbsdeSystem sys = AssembleFilteringSystem(ExponentialSpec());
  const RiccatiSolution ric = SolveDecoupling(sys, MakeGrid(1.0, 64));
  const double Y0 = (ric.P[0] * ric.x0 + ric.h0[0])(0);
  EXPECT_NEAR(Y0, std::exp(1.0), 1e-6);
}

TEST(SolveDecoupling, BlowupIsReported) {
  // P' = -P^2 with P(1) = 2 has a pole at t = 1/2.
  LinearFbsdeSystem sys = ScalarRiccatiSystem();
  sys.G_T(0, 0) = 2.0;
  EXPECT_EQ(CodeOf([&] { SolveDecoupling(sys, MakeGrid(1.0, 64)); }),
            ErrorCode::kRiccatiBlowup);
}

TEST(SolveDecoupling, SingularInitialCouplingIsBreakdown) {
  // P == 1 and K = 1 make I - K P(0) singular.
  LinearFbsdeSystem sys = LinearFbsdeSystem::Zero(1);
  sys.G_T(0, 0) = 1.0;
  sys.K(0, 0) = 1.0;
  EXPECT_EQ(CodeOf([&] { SolveDecoupling(sys, MakeGrid(1.0, 8)); }),
            ErrorCode::kDecouplingBreakdown);
}

TEST(SolveDecoupling, SingularLambdaIsBreakdown) {
  // P == 1 and G_xZ = 1 make I - P G_xZ singular.
  LinearFbsdeSystem sys = LinearFbsdeSystem::Zero(1);
  sys.G_T(0, 0) = 1.0;
  sys.G_xZ = [](double) { return MatrixXd::Ones(1, 1); };
  EXPECT_EQ(CodeOf([&] { SolveDecoupling(sys, MakeGrid(1.0, 8)); }),
            ErrorCode::kDecouplingBreakdown);
}

TEST(SimulateFiltered, HomogeneousSystemIsConstant) {
  LinearFbsdeSystem sys = LinearFbsdeSystem::Zero(3);
  sys.kappa0 = 1.0;
  sys.K = VectorXd::Map(std::array{1.0, -1.0, -1.0}.data(), 3)
              .asDiagonal()
              .toDenseMatrix();
  const TimeGrid g = MakeGrid(1.0, 8);
  const RiccatiSolution ric = SolveDecoupling(sys, g);
  const FilteredTrajectories tr = SimulateFiltered(ric, sys, SamplePaths(g, 20, 3));
  const VectorXd e1 = VectorXd::Unit(3, 0);
  for (int j = 0; j < 20; ++j) {
    for (int k = 0; k <= 8; ++k) {
      EXPECT_EQ(VectorXd(tr.x(j, k)), e1);
      EXPECT_EQ(VectorXd(tr.Y(j, k)), e1);
      EXPECT_TRUE(VectorXd(tr.Z(j, k)).isZero(0.0));
    }
  }
}

TEST(SimulateFiltered, InitialStateIsDeterministic) {
  const LinearFbsdeSystem sys = AssembleFilteringSystem(SpecA());
  const TimeGrid g = MakeGrid(1.0, 16);
  const RiccatiSolution ric = SolveDecoupling(sys, g);
  const FilteredTrajectories tr = SimulateFiltered(ric, sys, SamplePaths(g, 50, 1));
  for (int j = 1; j < 50; ++j) {
    EXPECT_EQ(VectorXd(tr.x(j, 0)), VectorXd(tr.x(0, 0)));
    EXPECT_EQ(VectorXd(tr.Y(j, 0)), VectorXd(tr.Y(0, 0)));
  }
  EXPECT_EQ(VectorXd(tr.x(0, 0)), ric.x0);
}

TEST(SimulateFiltered, IndependentOfWorkerCount) {
  const LinearFbsdeSystem sys = AssembleFilteringSystem(SpecA());
  const TimeGrid g = MakeGrid(1.0, 16);
  const RiccatiSolution ric = SolveDecoupling(sys, g);
  const PathEnsemble paths = SamplePaths(g, 301, 5);
  SetWorkerCount(1);
  const FilteredTrajectories a = SimulateFiltered(ric, sys, paths);
  SetWorkerCount(6);
  const FilteredTrajectories b = SimulateFiltered(ric, sys, paths);
  SetWorkerCount(1);
  for (int j = 0; j < 301; ++j) {
    for (int k = 0; k <= 16; ++k) {
      EXPECT_EQ(VectorXd(a.Y(j, k)), VectorXd(b.Y(j, k)));
    }
  }
}

// The Euler recursion is affine in (x, W, dW), so its mean is the same under
// Gaussian and binary increments; the ensemble mean must match the exact
// tree mean up to Monte Carlo error.
TEST(SimulateFiltered, EnsembleMeanMatchesTree) {
  const LinearFbsdeSystem sys = AssembleFilteringSystem(SpecA());
  const int N = 8;
  const TreeNoise tree = EnumerateTree(MakeGrid(1.0, N));
  const RiccatiSolution ric = SolveDecoupling(sys, tree.grid());
  const FilteredTreeStates states =
      RunFilteredOnTree(DecoupledDynamics(ric, sys), tree);
  const int paths = 10000;
  const FilteredTrajectories tr =
      SimulateFiltered(ric, sys, SamplePaths(tree.grid(), paths, 42));
  for (int k = 0; k <= N; ++k) {
    double tree_mean = 0.0;
    for (const VectorXd& Y : states.Y[k]) tree_mean += Y(0);
    tree_mean /= static_cast<double>(states.Y[k].size());
    double s = 0.0, ss = 0.0;
    for (int j = 0; j < paths; ++j) {
      s += tr.Y(j, k)(0);
      ss += tr.Y(j, k)(0) * tr.Y(j, k)(0);
    }
    const double mean = s / paths;
    const double se = std::sqrt(std::max(0.0, ss / paths - mean * mean) / paths);
    EXPECT_LE(std::abs(mean - tree_mean), 3.0 * se + 0.01 * tree.grid().dt())
        << "k=" << k;
  }
}

TEST(SynthesizeEquilibrium, Formula) {
  LqGameSpec spec = SpecA();
  spec.weight(1, 7) = 2.0;
  spec.a3 = 4.0;
  const TimeGrid g = MakeGrid(1.0, 4);
  const EquilibriumPolicy policy =
      SynthesizeEquilibrium(g, spec, {PlayerCost(spec, 1), PlayerCost(spec, 2)});
  EXPECT_EQ(policy.Controls(2, 3.0, 0.0).v1, -6.0);
  EXPECT_EQ(policy.gain(2, 0), -0.6 / 1.5);

  spec.a3 = 0.0;
  const EquilibriumPolicy dead =
      SynthesizeEquilibrium(g, spec, {PlayerCost(spec, 1), PlayerCost(spec, 2)});
  for (double p : {-5.0, 0.0, 7.0}) EXPECT_EQ(dead.Controls(1, p, 1.0).v1, 0.0);
}

TEST(SynthesizeEquilibrium, StationarityAlongTrajectoriesIsExact) {
  const LqGameSpec spec = SpecA();
  const LinearFbsdeSystem sys = AssembleFilteringSystem(spec);
  const TimeGrid g = MakeGrid(1.0, 32);
  const RiccatiSolution ric = SolveDecoupling(sys, g);
  const EquilibriumPolicy policy = SynthesizeEquilibrium(ric, spec);
  const FilteredTrajectories tr = SimulateFiltered(ric, sys, SamplePaths(g, 100, 2));
  for (int j = 0; j < 100; ++j) {
    for (int k = 0; k < 32; ++k) {
      const double p1 = tr.x(j, k)(1), p2 = tr.x(j, k)(2);
      const ControlPair u = policy.Controls(k, p1, p2);
      EXPECT_NEAR(StationarityResidual(1, g.time(k), p1, u.v1, spec), 0.0, 1e-15);
      EXPECT_NEAR(StationarityResidual(2, g.time(k), p2, u.v2, spec), 0.0, 1e-15);
    }
  }
}

TEST(EquilibriumPolicy, CsvRoundTrip) {
  const LqGameSpec spec = SpecA();
  const TimeGrid g = MakeGrid(1.0, 8);
  const EquilibriumPolicy policy = SynthesizeEquilibrium(
      g, spec, {PlayerCost(spec, 1), PlayerCost(spec, 2)}).Shifted(2, 0.1);
  std::stringstream csv;
  policy.WriteCsv(csv);
  const EquilibriumPolicy back = EquilibriumPolicy::ReadCsv(csv, g);
  for (int k = 0; k <= 8; ++k) {
    for (int i = 1; i <= 2; ++i) {
      EXPECT_EQ(back.gain(i, k), policy.gain(i, k));
      EXPECT_EQ(back.offset(i, k), policy.offset(i, k));
    }
  }
  EXPECT_EQ(back.offset(2, 3), 0.1);
}

TEST(EquilibriumPolicy, MalformedCsv) {
  const TimeGrid g = MakeGrid(1.0, 1);
  const std::string header = "k,t,gain1,gain2,offset1,offset2\n";
  auto read = [&](const std::string& text) {
    std::istringstream in(text);
    EquilibriumPolicy::ReadCsv(in, g);
  };
  EXPECT_EQ(CodeOf([&] { read(header + "0,0,1,1,0\n1,1,1,1,0,0\n"); }),
            ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { read(header + "0,0,1,x,0,0\n1,1,1,1,0,0\n"); }),
            ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { read(header + "0,0,1,1,0,0\n"); }),
            ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([&] { read(header + "0,0,1,1,0,0\n5,1,1,1,0,0\n"); }),
            ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([&] { read("a,b\n0,0,1,1,0,0\n1,1,1,1,0,0\n"); }),
            ErrorCode::kSchema);
  EXPECT_NO_THROW(read(header + "0,0,1,1,0,0\n1,1,1,1,0,0\n"));
}

TEST(DecouplingResidual, ZeroForHomogeneousSystem) {
  LinearFbsdeSystem sys = LinearFbsdeSystem::Zero(3);
  sys.kappa0 = 1.0;
  sys.K = MatrixXd::Identity(3, 3);
  const TimeGrid g = MakeGrid(1.0, 8);
  const ResidualStats r =
      DecouplingResidual(SolveDecoupling(sys, g), sys, SamplePaths(g, 30, 1));
  EXPECT_EQ(r.max_abs, 0.0);
  EXPECT_EQ(r.step_rms, 0.0);
  EXPECT_EQ(r.accumulated_rms, 0.0);
}

double RatioAtHalving(const LinearFbsdeSystem& sys, int N, double horizon) {
  auto rms = [&](int n) {
    const TimeGrid g = MakeGrid(horizon, n);
    return DecouplingResidual(SolveDecoupling(sys, g), sys,
                              SamplePaths(g, 10000, 42))
        .accumulated_rms;
  };
  return rms(N) / rms(2 * N);
}

// Without forward noise the Euler step is exact on x(t) = C (1 + t) and only
// the RK4 error remains, so unit forward noise is added; P is unchanged.
TEST(DecouplingResidual, ScalarFirstOrder) {
  LinearFbsdeSystem sys = ScalarRiccatiSystem();
  sys.g_x = [](double) { return Eigen::VectorXd::Ones(1); };
  sys.K = 0.5 * MatrixXd::Ones(1, 1);
  sys.kappa0 = 1.0;
  const double ratio = RatioAtHalving(sys, 32, 1.0);
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 2.5);
}

TEST(DecouplingResidual, ReferenceInstanceFirstOrder) {
  const double ratio = RatioAtHalving(AssembleFilteringSystem(SpecA()), 64, 1.0);
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 2.5);
}

}  // namespace
}  // namespace fbdsde
