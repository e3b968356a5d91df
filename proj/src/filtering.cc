#include "fbdsde/filtering.h"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fbdsde/error.h"
#include "fbdsde/parallel.h"

namespace fbdsde {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double ConditionNumber(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smallest = s(s.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smallest;
}

struct DecouplingState {
  MatrixXd P;
  VectorXd h1;
  VectorXd h0;
};

class DecouplingOde {
 public:
  DecouplingOde(const LinearFbsdeSystem& sys, const DecouplingOptions& options,
                DecouplingDiagnostics& diagnostics)
      : sys_(sys), options_(options), diagnostics_(diagnostics) {}

  DecouplingState Derivative(double t, const DecouplingState& s) const {
    const int n = sys_.dimension;
    const MatrixXd I = MatrixXd::Identity(n, n);
    const MatrixXd F_xx = sys_.F_xx(t), F_xY = sys_.F_xY(t),
                   F_xZ = sys_.F_xZ(t);
    const MatrixXd G_xx = sys_.G_xx(t), G_xY = sys_.G_xY(t),
                   G_xZ = sys_.G_xZ(t);
    const MatrixXd F_Yx = sys_.F_Yx(t), F_YY = sys_.F_YY(t),
                   F_YZ = sys_.F_YZ(t);
    const VectorXd f_x = sys_.f_x(t), g_x = sys_.g_x(t), f_Y = sys_.f_Y(t);

    const MatrixXd lambda_inv = I - s.P * G_xZ;
    CheckCondition(lambda_inv);
    const auto lambda = lambda_inv.partialPivLu();

    const MatrixXd M1 = s.P * (G_xx + G_xY * s.P);
    const VectorXd MW = s.P * G_xY * s.h1;
    const VectorXd M0 = s.P * (G_xY * s.h0 + g_x) + s.h1;
    const MatrixXd coupling = F_YZ - s.P * F_xZ;
    const MatrixXd transport = F_YY - s.P * F_xY;

    DecouplingState d;
    d.P = F_Yx + F_YY * s.P - s.P * F_xx - s.P * F_xY * s.P +
          coupling * lambda.solve(M1);
    d.h1 = transport * s.h1 + coupling * lambda.solve(MW);
    d.h0 = transport * s.h0 + coupling * lambda.solve(M0) + f_Y - s.P * f_x;
    return d;
  }

  void CheckCondition(const MatrixXd& lambda_inv) const {
    const double cond = ConditionNumber(lambda_inv);
    if (cond > diagnostics_.max_lambda_condition) {
      diagnostics_.max_lambda_condition = cond;
    }
    if (!(cond <= options_.condition_limit)) {
      throw Error(ErrorCode::kDecouplingBreakdown,
                  "I - P G_xZ is singular (condition number " +
                      std::to_string(cond) + ")");
    }
  }

 private:
  const LinearFbsdeSystem& sys_;
  const DecouplingOptions& options_;
  DecouplingDiagnostics& diagnostics_;
};

DecouplingState Axpy(const DecouplingState& s, double a,
                     const DecouplingState& d) {
  return {s.P + a * d.P, s.h1 + a * d.h1, s.h0 + a * d.h0};
}

MatrixXd Diag3(double a, double b, double c) {
  MatrixXd m = MatrixXd::Zero(3, 3);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

VectorXd First3(double value) {
  VectorXd v = VectorXd::Zero(3);
  v(0) = value;
  return v;
}

}  // namespace

LinearFbsdeSystem LinearFbsdeSystem::Zero(int dimension) {
  LinearFbsdeSystem sys;
  sys.dimension = dimension;
  const MatrixFn zero_m = [dimension](double) {
    return MatrixXd::Zero(dimension, dimension).eval();
  };
  const VectorFn zero_v = [dimension](double) {
    return VectorXd::Zero(dimension).eval();
  };
  sys.F_xx = sys.F_xY = sys.F_xZ = zero_m;
  sys.G_xx = sys.G_xY = sys.G_xZ = zero_m;
  sys.F_Yx = sys.F_YY = sys.F_YZ = zero_m;
  sys.f_x = sys.g_x = sys.f_Y = zero_v;
  sys.G_T = MatrixXd::Zero(dimension, dimension);
  sys.K = MatrixXd::Zero(dimension, dimension);
  return sys;
}

LinearFbsdeSystem AssembleFilteringSystem(
    const GameDynamics& d, const std::array<CostView, 2>& costs) {
  LinearFbsdeSystem sys = LinearFbsdeSystem::Zero(3);
  const CostView w1 = costs[0];
  const CostView w2 = costs[1];

  // Backward drift in A-form: -dY = [A1 Y + A2 x + A3 Z + a] dt - Z dW.
  sys.F_YY = [d](double t) {
    return Diag3(-d.a1(t), -d.c1(t), -d.c1(t));
  };
  sys.F_Yx = [d, w1, w2](double t) {
    MatrixXd m = MatrixXd::Zero(3, 3);
    const double a3 = d.a3(t);
    const double a4 = d.a4(t);
    m(0, 1) = a3 * a3 / w1.control[0](t);
    m(0, 2) = a4 * a4 / w2.control[1](t);
    m(1, 0) = w1.state[0](t);
    m(2, 0) = w2.state[0](t);
    return m;
  };
  sys.F_YZ = [d](double t) { return Diag3(-d.a2(t), 0.0, 0.0); };
  sys.f_Y = [d](double t) { return First3(-d.a0(t)); };

  sys.F_xY = [d, w1, w2](double t) {
    MatrixXd m = MatrixXd::Zero(3, 3);
    const double c2 = d.c2(t);
    m(0, 0) = c2;
    m(1, 0) = w1.state[2](t);
    m(1, 1) = -c2;
    m(2, 0) = w2.state[2](t);
    m(2, 2) = -c2;
    return m;
  };
  sys.F_xx = [d](double t) { return Diag3(d.c1(t), d.a1(t), d.a1(t)); };
  sys.F_xZ = [d](double t) { return Diag3(d.c3(t), 0.0, 0.0); };
  sys.f_x = [d](double t) { return First3(d.c0(t)); };

  sys.G_xY = [d](double t) { return Diag3(0.0, -d.c3(t), -d.c3(t)); };
  sys.G_xx = [d](double t) { return Diag3(0.0, d.a2(t), d.a2(t)); };
  sys.G_xZ = [w1, w2](double t) {
    MatrixXd m = MatrixXd::Zero(3, 3);
    m(1, 0) = w1.state[3](t);
    m(2, 0) = w2.state[3](t);
    return m;
  };
  sys.g_x = [d](double t) { return First3(d.d0(t)); };

  sys.G_T = MatrixXd::Zero(3, 3);
  sys.G_T(1, 0) = -w1.terminal_y;
  sys.G_T(2, 0) = -w2.terminal_y;
  sys.K = MatrixXd::Zero(3, 3);
  sys.K(0, 0) = d.M;
  sys.K(1, 0) = w1.initial_Y;
  sys.K(1, 1) = -d.M;
  sys.K(2, 0) = w2.initial_Y;
  sys.K(2, 2) = -d.M;
  sys.kappa0 = d.terminal.kappa0;
  sys.kappa1 = d.terminal.kappa1;
  return sys;
}

LinearFbsdeSystem AssembleFilteringSystem(const LqGameSpec& spec) {
  const auto report = ValidateSpec(spec);
  if (!report.ok()) {
    throw Error(ErrorCode::kValidation,
                "filtering assembly needs a valid spec: " +
                    report.violations.front());
  }
  if (spec.info != InfoStructure::kWFiltration) {
    throw Error(ErrorCode::kUnsupportedConfiguration,
                "the filtering system is defined for the W-filtration only");
  }
  return AssembleFilteringSystem(spec,
                                 {PlayerCost(spec, 1), PlayerCost(spec, 2)});
}

LinearFbsdeSystem AssembleFilteringSystem(const ZeroSumSpec& spec) {
  const auto report = ValidateSpec(spec);
  if (!report.ok()) {
    throw Error(ErrorCode::kValidation,
                "filtering assembly needs a valid spec: " +
                    report.violations.front());
  }
  if (spec.info != InfoStructure::kWFiltration) {
    throw Error(ErrorCode::kUnsupportedConfiguration,
                "the filtering system is defined for the W-filtration only");
  }
  const ZeroSumViews views = ToZeroSum(spec);
  return AssembleFilteringSystem(spec, {views.player1, views.player2});
}

RiccatiSolution SolveDecoupling(const LinearFbsdeSystem& sys,
                                const TimeGrid& grid,
                                const DecouplingOptions& options) {
  const int n = sys.dimension;
  const int N = grid.steps();
  const double dt = grid.dt();
  RiccatiSolution sol{grid, std::vector<MatrixXd>(N + 1),
                      std::vector<VectorXd>(N + 1),
                      std::vector<VectorXd>(N + 1), VectorXd::Zero(n), {}};
  DecouplingOde ode(sys, options, sol.diagnostics);

  DecouplingState state{sys.G_T, VectorXd::Zero(n), VectorXd::Zero(n)};
  state.h1(0) = sys.kappa1;
  state.h0(0) = sys.kappa0;

  auto record = [&](int k, const DecouplingState& s) {
    const double peak = s.P.size() ? s.P.cwiseAbs().maxCoeff() : 0.0;
    sol.diagnostics.max_abs_P = std::max(sol.diagnostics.max_abs_P, peak);
    if (!(peak <= options.blowup_limit) || !s.h0.allFinite() ||
        !s.h1.allFinite()) {
      throw Error(ErrorCode::kRiccatiBlowup,
                  "decoupling field blew up at t = " +
                      std::to_string(grid.time(k)));
    }
    sol.P[k] = s.P;
    sol.h1[k] = s.h1;
    sol.h0[k] = s.h0;
  };
  record(N, state);

  for (int k = N - 1; k >= 0; --k) {
    const double t_hi = grid.time(k + 1);
    const double t_mid = t_hi - 0.5 * dt;
    const double t_lo = grid.time(k);
    // Integrating backward: each stage steps by -dt.
    const DecouplingState k1 = ode.Derivative(t_hi, state);
    const DecouplingState k2 = ode.Derivative(t_mid, Axpy(state, -0.5 * dt, k1));
    const DecouplingState k3 = ode.Derivative(t_mid, Axpy(state, -0.5 * dt, k2));
    const DecouplingState k4 = ode.Derivative(t_lo, Axpy(state, -dt, k3));
    state.P -= dt / 6.0 * (k1.P + 2.0 * k2.P + 2.0 * k3.P + k4.P);
    state.h1 -= dt / 6.0 * (k1.h1 + 2.0 * k2.h1 + 2.0 * k3.h1 + k4.h1);
    state.h0 -= dt / 6.0 * (k1.h0 + 2.0 * k2.h0 + 2.0 * k3.h0 + k4.h0);
    record(k, state);
  }
  // The terminal node is an assignment; keep it exact.
  sol.P[N] = sys.G_T;

  ode.CheckCondition(MatrixXd::Identity(n, n) - sol.P[0] * sys.G_xZ(0.0));
  const MatrixXd initial = MatrixXd::Identity(n, n) - sys.K * sol.P[0];
  sol.diagnostics.initial_condition = ConditionNumber(initial);
  if (!(sol.diagnostics.initial_condition <= options.condition_limit)) {
    throw Error(ErrorCode::kDecouplingBreakdown,
                "I - K P(0) is singular (condition number " +
                    std::to_string(sol.diagnostics.initial_condition) + ")");
  }
  sol.x0 = initial.partialPivLu().solve(sys.K * sol.h0[0]);
  return sol;
}

DecoupledDynamics::DecoupledDynamics(const RiccatiSolution& ric,
                                     const LinearFbsdeSystem& sys)
    : grid_(ric.grid), dimension_(sys.dimension), x0_(ric.x0) {
  const int n = sys.dimension;
  const MatrixXd I = MatrixXd::Identity(n, n);
  nodes_.resize(grid_.steps() + 1);
  for (int k = 0; k <= grid_.steps(); ++k) {
    const double t = grid_.time(k);
    Node& node = nodes_[k];
    node.P = ric.P[k];
    node.h0 = ric.h0[k];
    node.h1 = ric.h1[k];
    const MatrixXd G_xx = sys.G_xx(t), G_xY = sys.G_xY(t), G_xZ = sys.G_xZ(t);
    const auto lambda = (I - node.P * G_xZ).partialPivLu();
    node.Zx = lambda.solve(node.P * (G_xx + G_xY * node.P));
    node.ZW = lambda.solve(node.P * G_xY * node.h1);
    node.Z0 = lambda.solve(node.P * (G_xY * node.h0 + sys.g_x(t)) + node.h1);

    const MatrixXd F_xx = sys.F_xx(t), F_xY = sys.F_xY(t), F_xZ = sys.F_xZ(t);
    node.Ax = F_xx + F_xY * node.P + F_xZ * node.Zx;
    node.AW = F_xY * node.h1 + F_xZ * node.ZW;
    node.A0 = F_xY * node.h0 + F_xZ * node.Z0 + sys.f_x(t);
    node.Bx = G_xx + G_xY * node.P + G_xZ * node.Zx;
    node.BW = G_xY * node.h1 + G_xZ * node.ZW;
    node.B0 = G_xY * node.h0 + G_xZ * node.Z0 + sys.g_x(t);

    node.F_Yx = sys.F_Yx(t);
    node.F_YY = sys.F_YY(t);
    node.F_YZ = sys.F_YZ(t);
    node.f_Y = sys.f_Y(t);
  }
}

VectorXd DecoupledDynamics::Backward(int k, const VectorXd& x, double w) const {
  const Node& node = nodes_[k];
  return node.P * x + node.h0 + node.h1 * w;
}

VectorXd DecoupledDynamics::Martingale(int k, const VectorXd& x,
                                       double w) const {
  const Node& node = nodes_[k];
  return node.Zx * x + node.ZW * w + node.Z0;
}

VectorXd DecoupledDynamics::Step(int k, const VectorXd& x, double w,
                                 double dw) const {
  const Node& node = nodes_[k];
  return x + grid_.dt() * (node.Ax * x + node.AW * w + node.A0) +
         dw * (node.Bx * x + node.BW * w + node.B0);
}

VectorXd DecoupledDynamics::BackwardDrift(int k, const VectorXd& x,
                                          const VectorXd& Y,
                                          const VectorXd& Z) const {
  const Node& node = nodes_[k];
  return node.F_Yx * x + node.F_YY * Y + node.F_YZ * Z + node.f_Y;
}

FilteredTrajectories::FilteredTrajectories(int paths, int steps, int dimension)
    : paths_(paths), steps_(steps), dimension_(dimension) {
  const std::size_t nodes = static_cast<std::size_t>(paths) * (steps + 1);
  x_.assign(nodes * dimension, 0.0);
  Y_.assign(nodes * dimension, 0.0);
  Z_.assign(nodes * dimension, 0.0);
  W_.assign(nodes, 0.0);
}

FilteredTrajectories SimulateFiltered(const RiccatiSolution& riccati,
                                      const LinearFbsdeSystem& system,
                                      const PathEnsemble& paths) {
  if (!(paths.grid() == riccati.grid)) {
    throw Error(ErrorCode::kInvalidArgument,
                "ensemble and decoupling grids differ");
  }
  const DecoupledDynamics dyn(riccati, system);
  const int N = riccati.grid.steps();
  FilteredTrajectories out(paths.count(), N, system.dimension);
  ParallelFor(static_cast<std::size_t>(paths.count()), [&](std::size_t j) {
    const int path = static_cast<int>(j);
    VectorXd x = dyn.initial_state();
    double w = 0.0;
    for (int k = 0; k <= N; ++k) {
      out.x(path, k) = x;
      out.Y(path, k) = dyn.Backward(k, x, w);
      out.Z(path, k) = dyn.Martingale(k, x, w);
      out.W(path, k) = w;
      if (k == N) break;
      const double dw = paths.dW(path, k);
      x = dyn.Step(k, x, w, dw);
      w += dw;
    }
  });
  return out;
}

EquilibriumPolicy::EquilibriumPolicy(TimeGrid grid,
                                     std::array<std::vector<double>, 2> gains,
                                     std::array<std::vector<double>, 2> offsets)
    : grid_(grid), gains_(std::move(gains)), offsets_(std::move(offsets)) {
  const std::size_t nodes = static_cast<std::size_t>(grid_.steps()) + 1;
  for (int i = 0; i < 2; ++i) {
    if (gains_[i].size() != nodes || offsets_[i].size() != nodes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "policy tables must have one entry per grid node");
    }
  }
}

ControlPair EquilibriumPolicy::Controls(int k, double filtered_p1,
                                        double filtered_p2) const {
  return {gains_[0][k] * filtered_p1 + offsets_[0][k],
          gains_[1][k] * filtered_p2 + offsets_[1][k]};
}

EquilibriumPolicy EquilibriumPolicy::Shifted(int player, double shift) const {
  EquilibriumPolicy out = *this;
  for (double& o : out.offsets_[player - 1]) o += shift;
  return out;
}

void EquilibriumPolicy::WriteCsv(std::ostream& out) const {
  out << "k,t,gain1,gain2,offset1,offset2\n";
  const auto old_precision = out.precision(17);
  for (int k = 0; k <= grid_.steps(); ++k) {
    out << k << ',' << grid_.time(k) << ',' << gains_[0][k] << ','
        << gains_[1][k] << ',' << offsets_[0][k] << ',' << offsets_[1][k]
        << '\n';
  }
  out.precision(old_precision);
}

EquilibriumPolicy EquilibriumPolicy::ReadCsv(std::istream& in,
                                             const TimeGrid& grid) {
  const std::size_t nodes = static_cast<std::size_t>(grid.steps()) + 1;
  std::array<std::vector<double>, 2> gains{std::vector<double>(nodes),
                                           std::vector<double>(nodes)};
  auto offsets = gains;
  std::vector<bool> seen(nodes, false);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "k,t,gain1,gain2,offset1,offset2") {
        throw Error(ErrorCode::kSchema, "policy csv header must be "
                                        "k,t,gain1,gain2,offset1,offset2");
      }
      continue;
    }
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParse, "policy csv line " +
                                           std::to_string(line_no) +
                                           ": not a number: " + cell);
      }
    }
    if (values.size() != 6) {
      throw Error(ErrorCode::kParse, "policy csv line " +
                                         std::to_string(line_no) +
                                         ": expected 6 columns");
    }
    const auto k = static_cast<long>(values[0]);
    if (k < 0 || static_cast<std::size_t>(k) >= nodes) {
      throw Error(ErrorCode::kSchema, "policy csv line " +
                                          std::to_string(line_no) +
                                          ": node index outside the grid");
    }
    if (std::abs(values[1] - grid.time(static_cast<int>(k))) > 1e-9) {
      throw Error(ErrorCode::kSchema, "policy csv line " +
                                          std::to_string(line_no) +
                                          ": time does not match the grid");
    }
    gains[0][k] = values[2];
    gains[1][k] = values[3];
    offsets[0][k] = values[4];
    offsets[1][k] = values[5];
    seen[k] = true;
  }
  for (std::size_t k = 0; k < nodes; ++k) {
    if (!seen[k]) {
      throw Error(ErrorCode::kSchema,
                  "policy csv misses node " + std::to_string(k));
    }
  }
  return EquilibriumPolicy(grid, std::move(gains), std::move(offsets));
}

EquilibriumPolicy SynthesizeEquilibrium(const TimeGrid& grid,
                                        const GameDynamics& d,
                                        const std::array<CostView, 2>& costs) {
  const std::size_t nodes = static_cast<std::size_t>(grid.steps()) + 1;
  std::array<std::vector<double>, 2> gains{std::vector<double>(nodes),
                                           std::vector<double>(nodes)};
  std::array<std::vector<double>, 2> offsets{std::vector<double>(nodes, 0.0),
                                             std::vector<double>(nodes, 0.0)};
  for (std::size_t k = 0; k < nodes; ++k) {
    const double t = grid.time(static_cast<int>(k));
    gains[0][k] = -d.a3(t) / costs[0].control[0](t);
    gains[1][k] = -d.a4(t) / costs[1].control[1](t);
  }
  return EquilibriumPolicy(grid, std::move(gains), std::move(offsets));
}

EquilibriumPolicy SynthesizeEquilibrium(const RiccatiSolution& riccati,
                                        const LqGameSpec& spec) {
  return SynthesizeEquilibrium(riccati.grid, spec,
                               {PlayerCost(spec, 1), PlayerCost(spec, 2)});
}

ResidualStats DecouplingResidual(const RiccatiSolution& riccati,
                                 const LinearFbsdeSystem& system,
                                 const PathEnsemble& paths) {
  const FilteredTrajectories traj = SimulateFiltered(riccati, system, paths);
  const DecoupledDynamics dyn(riccati, system);
  const int N = riccati.grid.steps();
  const double dt = riccati.grid.dt();

  struct PathStats {
    double max_abs = 0.0;
    double step_sq = 0.0;
    double accumulated_sq = 0.0;
  };
  std::vector<PathStats> per_path(paths.count());
  ParallelFor(static_cast<std::size_t>(paths.count()), [&](std::size_t j) {
    const int path = static_cast<int>(j);
    PathStats& st = per_path[j];
    VectorXd accumulated = VectorXd::Zero(system.dimension);
    for (int k = 0; k < N; ++k) {
      const VectorXd x = traj.x(path, k);
      const VectorXd Y = traj.Y(path, k);
      const VectorXd Z = traj.Z(path, k);
      const VectorXd r = traj.Y(path, k + 1) - Y -
                         dyn.BackwardDrift(k, x, Y, Z) * dt -
                         Z * paths.dW(path, k);
      accumulated += r;
      st.max_abs = std::max(st.max_abs, r.cwiseAbs().maxCoeff());
      st.step_sq += r.squaredNorm();
      st.accumulated_sq += accumulated.squaredNorm();
    }
  });
  // Reduce in path order so the result does not depend on the worker count.
  ResidualStats stats;
  double step_sq = 0.0;
  double accumulated_sq = 0.0;
  for (const PathStats& st : per_path) {
    stats.max_abs = std::max(stats.max_abs, st.max_abs);
    step_sq += st.step_sq;
    accumulated_sq += st.accumulated_sq;
  }
  const double samples =
      static_cast<double>(paths.count()) * N * system.dimension;
  stats.step_rms = std::sqrt(step_sq / samples);
  stats.accumulated_rms = std::sqrt(accumulated_sq / samples);
  return stats;
}

}  // namespace fbdsde
