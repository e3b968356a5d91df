#include "fbdsde/oracle.h"

#include <ostream>

#include "fbdsde/error.h"

namespace fbdsde {

namespace {

constexpr std::uint64_t Bit(int k) { return std::uint64_t{1} << k; }

}  // namespace

TreeProcess::TreeProcess(int steps)
    : steps_(steps),
      levels_(steps + 1, std::vector<double>(std::size_t{1} << steps, 0.0)) {}

FilteredTreeStates RunFilteredOnTree(const DecoupledDynamics& dynamics,
                                     const TreeNoise& tree) {
  const int N = tree.steps();
  FilteredTreeStates out;
  out.x.resize(N + 1);
  out.Y.resize(N + 1);
  out.x[0] = {dynamics.initial_state()};
  out.Y[0] = {dynamics.Backward(0, dynamics.initial_state(), 0.0)};
  for (int k = 0; k < N; ++k) {
    out.x[k + 1].resize(Bit(k + 1));
    out.Y[k + 1].resize(Bit(k + 1));
    for (std::uint64_t prefix = 0; prefix < Bit(k); ++prefix) {
      const double w = tree.W(prefix, k);
      for (std::uint64_t up = 0; up < 2; ++up) {
        const std::uint64_t next = prefix | (up << k);
        const double dw = up ? tree.sqrt_dt() : -tree.sqrt_dt();
        out.x[k + 1][next] = dynamics.Step(k, out.x[k][prefix], w, dw);
        out.Y[k + 1][next] =
            dynamics.Backward(k + 1, out.x[k + 1][next], tree.W(next, k + 1));
      }
    }
  }
  return out;
}

PolicyOnTree::PolicyOnTree(const TreeNoise& tree)
    : u_{TreeProcess(tree.steps()), TreeProcess(tree.steps())} {}

PolicyOnTree PolicyOnTree::FromEquilibrium(const EquilibriumPolicy& policy,
                                           const DecoupledDynamics& dynamics,
                                           const TreeNoise& tree) {
  if (!(policy.grid() == tree.grid()) || !(dynamics.grid() == tree.grid())) {
    throw Error(ErrorCode::kInvalidArgument,
                "policy, decoupling and tree grids differ");
  }
  const FilteredTreeStates states = RunFilteredOnTree(dynamics, tree);
  PolicyOnTree out(tree);
  const int N = tree.steps();
  for (int k = 0; k < N; ++k) {
    const std::uint64_t mask = Bit(k) - 1;
    for (std::uint64_t node = 0; node < out.u_[0].nodes(); ++node) {
      const Eigen::VectorXd& x = states.x[k][node & mask];
      const ControlPair c = policy.Controls(k, x(1), x(2));
      out.u_[0].at(k, node) = c.v1;
      out.u_[1].at(k, node) = c.v2;
    }
  }
  return out;
}

PolicyOnTree PolicyOnTree::FromRules(const TreeNoise& tree, const Rule& u1,
                                     const Rule& u2) {
  PolicyOnTree out(tree);
  for (int k = 0; k < tree.steps(); ++k) {
    const double t = tree.grid().time(k);
    for (std::uint64_t node = 0; node < out.u_[0].nodes(); ++node) {
      const double w = tree.W(node, k);
      out.u_[0].at(k, node) = u1(k, t, w);
      out.u_[1].at(k, node) = u2(k, t, w);
    }
  }
  return out;
}

PolicyOnTree PolicyOnTree::Perturbed(const TreeNoise& tree, int player,
                                     double eps, const Rule& beta) const {
  PolicyOnTree out = *this;
  TreeProcess& u = out.u_[player - 1];
  for (int k = 0; k < tree.steps(); ++k) {
    const double t = tree.grid().time(k);
    for (std::uint64_t node = 0; node < u.nodes(); ++node) {
      u.at(k, node) += eps * beta(k, t, tree.W(node, k));
    }
  }
  return out;
}

bool PolicyOnTree::IsWAdapted() const {
  for (const TreeProcess& u : u_) {
    for (int k = 0; k < u.steps(); ++k) {
      const std::uint64_t mask = Bit(k) - 1;
      for (std::uint64_t node = 0; node < u.nodes(); ++node) {
        if (u.at(k, node) != u.at(k, node & mask)) return false;
      }
    }
  }
  return true;
}

void SolveBackwardOnTree(const GameDynamics& d, const PolicyOnTree& policy,
                         const TreeNoise& tree, TreeProcess& Y,
                         TreeProcess& Z) {
  const int N = tree.steps();
  const double dt = tree.grid().dt();
  const double sq = tree.sqrt_dt();
  const std::uint64_t nodes = Y.nodes();
  for (std::uint64_t w = 0; w < nodes; ++w) {
    Y.at(N, w) = d.terminal(tree.W(w, N));
  }
  for (int k = N - 1; k >= 0; --k) {
    const double t = tree.grid().time(k);
    const double a0 = d.a0(t), a1 = d.a1(t), a2 = d.a2(t), a3 = d.a3(t),
                 a4 = d.a4(t);
    const double b0 = d.b0(tree.grid().time(k + 1));
    for (std::uint64_t node = 0; node < nodes; ++node) {
      const std::uint64_t base = node & ~Bit(k);
      const double up = Y.at(k + 1, base | Bit(k));
      const double down = Y.at(k + 1, base);
      const double mean = 0.5 * (up + down);
      const double z = (up - down) / (2.0 * sq);
      const double dB = (node & Bit(k)) ? sq : -sq;
      Z.at(k, node) = z;
      Y.at(k, node) =
          mean +
          dt * (a0 + a1 * mean + a2 * z + a3 * policy.control(1, k, node) +
                a4 * policy.control(2, k, node)) +
          b0 * dB;
    }
  }
}

void SolveForwardOnTree(const GameDynamics& d, const TreeProcess& Y,
                        const TreeProcess& Z, const TreeNoise& tree,
                        TreeProcess& y, TreeProcess& z) {
  const int N = tree.steps();
  const double dt = tree.grid().dt();
  const double sq = tree.sqrt_dt();
  const std::uint64_t nodes = Y.nodes();
  for (std::uint64_t b = 0; b < nodes; ++b) y.at(0, b) = d.M * Y.at(0, b);
  for (int k = 0; k < N; ++k) {
    const double t = tree.grid().time(k);
    const double c0 = d.c0(t), c1 = d.c1(t), c2 = d.c2(t), c3 = d.c3(t),
                 d0 = d.d0(t);
    auto S = [&](std::uint64_t node, double dw) {
      const double yk = y.at(k, node);
      return yk + dt * (c0 + c1 * yk + c2 * Y.at(k, node) + c3 * Z.at(k, node)) +
             d0 * dw;
    };
    for (std::uint64_t node = 0; node < nodes; ++node) {
      // As a level-(k+1) node, bit k is dW_k; the level-k parents differ in
      // bit k, which there is dB_k.
      const std::uint64_t base = node & ~Bit(k);
      const double dw = (node & Bit(k)) ? sq : -sq;
      const double plus = S(base | Bit(k), dw);
      const double minus = S(base, dw);
      y.at(k + 1, node) = 0.5 * (plus + minus);
      // The difference cancels d0 dW_k, so z_k ignores dW_k and dB_k.
      z.at(k, node) = (S(base | Bit(k), 0.0) - S(base, 0.0)) / (2.0 * sq);
    }
  }
}

TreeSolution SolveOnTree(const GameDynamics& dynamics,
                         const PolicyOnTree& policy, const TreeNoise& tree) {
  if (policy.steps() != tree.steps()) {
    throw Error(ErrorCode::kInvalidArgument, "policy and tree depths differ");
  }
  if (dynamics.info == InfoStructure::kWFiltration && !policy.IsWAdapted()) {
    throw Error(ErrorCode::kInvalidArgument,
                "policy depends on B but controls must be W-adapted");
  }
  const int N = tree.steps();
  TreeSolution sol{TreeProcess(N), TreeProcess(N), TreeProcess(N),
                   TreeProcess(N)};
  SolveBackwardOnTree(dynamics, policy, tree, sol.Y, sol.Z);
  SolveForwardOnTree(dynamics, sol.Y, sol.Z, tree, sol.y, sol.z);
  return sol;
}

double EvalCostOnTree(const CostView& cost, const TreeSolution& sol,
                      const PolicyOnTree& policy, const TreeNoise& tree) {
  const int N = tree.steps();
  const double dt = tree.grid().dt();
  const std::uint64_t nodes = sol.Y.nodes();
  const double inv_nodes = 1.0 / static_cast<double>(nodes);
  double running = 0.0;
  for (int k = 0; k < N; ++k) {
    const double t = tree.grid().time(k);
    const double wy = cost.state[0](t), wz = cost.state[1](t),
                 wY = cost.state[2](t), wZ = cost.state[3](t),
                 wv1 = cost.control[0](t), wv2 = cost.control[1](t);
    double level = 0.0;
    for (std::uint64_t node = 0; node < nodes; ++node) {
      const double y = sol.y.at(k, node), z = sol.z.at(k, node),
                   Y = sol.Y.at(k, node), Z = sol.Z.at(k, node),
                   v1 = policy.control(1, k, node),
                   v2 = policy.control(2, k, node);
      level += wy * y * y + wz * z * z + wY * Y * Y + wZ * Z * Z +
               wv1 * v1 * v1 + wv2 * v2 * v2;
    }
    running += dt * level * inv_nodes;
  }
  double terminal = 0.0;
  double initial = 0.0;
  for (std::uint64_t node = 0; node < nodes; ++node) {
    terminal += sol.y.at(N, node) * sol.y.at(N, node);
    initial += sol.Y.at(0, node) * sol.Y.at(0, node);
  }
  return -0.5 * (running + cost.terminal_y * terminal * inv_nodes +
                 cost.initial_Y * initial * inv_nodes);
}

double EvalCostOnTree(const LqGameSpec& spec, int player,
                      const TreeSolution& solution, const PolicyOnTree& policy,
                      const TreeNoise& tree) {
  return EvalCostOnTree(PlayerCost(spec, player), solution, policy, tree);
}

std::vector<double> FilterOnTree(const TreeProcess& proc, int k) {
  const std::uint64_t prefixes = Bit(k);
  const std::uint64_t suffixes = proc.nodes() >> k;
  std::vector<double> out(prefixes, 0.0);
  for (std::uint64_t prefix = 0; prefix < prefixes; ++prefix) {
    double acc = 0.0;
    for (std::uint64_t b = 0; b < suffixes; ++b) {
      acc += proc.at(k, prefix | (b << k));
    }
    out[prefix] = acc / static_cast<double>(suffixes);
  }
  return out;
}

void WriteNodeDump(const TreeSolution& sol, const PolicyOnTree& policy,
                   const TreeNoise& tree, std::ostream& out) {
  if (tree.steps() > 6) {
    throw Error(ErrorCode::kResourceLimit, "node dumps are limited to N <= 6");
  }
  const int N = tree.steps();
  out << "k,node,w_prefix,b_suffix,W,y,z,Y,Z,u1,u2\n";
  const auto old_precision = out.precision(17);
  for (int k = 0; k <= N; ++k) {
    for (std::uint64_t node = 0; node < sol.Y.nodes(); ++node) {
      const bool has_rate = k < N;
      out << k << ',' << node << ',' << (node & (Bit(k) - 1)) << ','
          << (node >> k) << ',' << tree.W(node, k) << ',' << sol.y.at(k, node)
          << ',' << (has_rate ? sol.z.at(k, node) : 0.0) << ','
          << sol.Y.at(k, node) << ','
          << (has_rate ? sol.Z.at(k, node) : 0.0) << ','
          << (has_rate ? policy.control(1, k, node) : 0.0) << ','
          << (has_rate ? policy.control(2, k, node) : 0.0) << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace fbdsde
