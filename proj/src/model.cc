#include "fbdsde/model.h"

#include <cmath>
#include <sstream>

namespace fbdsde {

namespace {

struct NamedCoefficient {
  const char* name;
  const CoefficientFn* fn;
};

std::vector<NamedCoefficient> DynamicCoefficients(const GameDynamics& d) {
  return {{"a0", &d.a0}, {"a1", &d.a1}, {"a2", &d.a2}, {"a3", &d.a3},
          {"a4", &d.a4}, {"b0", &d.b0}, {"c0", &d.c0}, {"c1", &d.c1},
          {"c2", &d.c2}, {"c3", &d.c3}, {"d0", &d.d0}};
}

void ValidateDynamics(const GameDynamics& d, ValidationReport& report) {
  if (!(d.horizon > 0.0) || !std::isfinite(d.horizon)) {
    report.violations.push_back("horizon not positive");
    return;
  }
  for (const auto& [name, fn] : DynamicCoefficients(d)) {
    if (!fn->IsFiniteOn(0.0, d.horizon)) {
      report.violations.push_back(std::string(name) + " not bounded");
    }
  }
  if (d.M == 0.0) report.violations.push_back("M is zero");
  if (!std::isfinite(d.M)) report.violations.push_back("M not finite");
  if (!std::isfinite(d.terminal.kappa0) || !std::isfinite(d.terminal.kappa1)) {
    report.violations.push_back("terminal condition not finite");
  }
}

void CheckWeight(const std::string& name, const CoefficientFn& fn, double T,
                 bool strictly_positive, bool must_be_constant,
                 ValidationReport& report) {
  if (!fn.IsFiniteOn(0.0, T)) {
    report.violations.push_back(name + " not bounded");
    return;
  }
  if (must_be_constant && fn.kind() != CoefficientFn::Kind::kConstant) {
    report.violations.push_back(name + " not constant");
  }
  const double lowest = fn.MinOn(0.0, T);
  if (strictly_positive && !(lowest > 0.0)) {
    report.violations.push_back(name + " not positive");
  } else if (!strictly_positive && lowest < 0.0) {
    report.violations.push_back(name + " negative");
  }
}

}  // namespace

bool ValidationReport::Contains(const std::string& fragment) const {
  for (const auto& v : violations) {
    if (v.find(fragment) != std::string::npos) return true;
  }
  return false;
}

ValidationReport ValidateSpec(const LqGameSpec& spec) {
  ValidationReport report;
  ValidateDynamics(spec, report);
  if (!report.ok() && report.Contains("horizon")) return report;
  for (int i = 1; i <= 2; ++i) {
    for (int k = 1; k <= 7; ++k) {
      std::ostringstream name;
      name << 'e' << i << k;
      CheckWeight(name.str(), spec.weight(i, k), spec.horizon,
                  /*strictly_positive=*/k == 7,
                  /*must_be_constant=*/k == 5 || k == 6, report);
    }
  }
  return report;
}

ValidationReport ValidateSpec(const ZeroSumSpec& spec) {
  ValidationReport report;
  ValidateDynamics(spec, report);
  if (!report.ok() && report.Contains("horizon")) return report;
  for (int k = 1; k <= 6; ++k) {
    CheckWeight("l" + std::to_string(k), spec.l[k - 1], spec.horizon, false,
                k == 5 || k == 6, report);
  }
  CheckWeight("r1", spec.r1, spec.horizon, true, false, report);
  CheckWeight("r2", spec.r2, spec.horizon, true, false, report);
  return report;
}

CostView PlayerCost(const LqGameSpec& spec, int player) {
  CostView view;
  for (int k = 0; k < 4; ++k) view.state[k] = spec.weight(player, k + 1);
  view.control[player - 1] = spec.weight(player, 7);
  view.control[2 - player] = CoefficientFn(0.0);
  view.terminal_y = spec.weight(player, 5)(spec.horizon);
  view.initial_Y = spec.weight(player, 6)(0.0);
  return view;
}

ZeroSumViews ToZeroSum(const ZeroSumSpec& spec) {
  // J = 1/2 E[...] = -(-1/2 E[...]), so J1 = -J carries the weights as given.
  ZeroSumViews views;
  for (int k = 0; k < 4; ++k) views.player1.state[k] = spec.l[k];
  views.player1.control = {spec.r1, spec.r2.Scaled(-1.0)};
  views.player1.terminal_y = spec.l[4](spec.horizon);
  views.player1.initial_Y = spec.l[5](0.0);

  for (int k = 0; k < 4; ++k) {
    views.player2.state[k] = views.player1.state[k].Scaled(-1.0);
  }
  views.player2.control = {views.player1.control[0].Scaled(-1.0),
                           views.player1.control[1].Scaled(-1.0)};
  views.player2.terminal_y = -views.player1.terminal_y;
  views.player2.initial_Y = -views.player1.initial_Y;
  return views;
}

LqGameSpec ReduceSpec(const LqGameSpec& spec, ReductionTarget target) {
  LqGameSpec out = spec;
  const bool drop_backward_noise = target == ReductionTarget::kBsde ||
                                   target == ReductionTarget::kFbsde;
  const bool drop_forward = target == ReductionTarget::kBsde ||
                            target == ReductionTarget::kBdsde;
  if (drop_backward_noise) out.b0 = 0.0;
  if (drop_forward) {
    out.c0 = 0.0;
    out.c1 = 0.0;
    out.c2 = 0.0;
    out.c3 = 0.0;
    out.d0 = 0.0;
  }
  return out;
}

bool MatchesShape(const LqGameSpec& spec, ReductionTarget target) {
  const bool no_backward_noise = spec.b0.IsIdenticallyZero();
  const bool no_forward = spec.c0.IsIdenticallyZero() &&
                          spec.c1.IsIdenticallyZero() &&
                          spec.c2.IsIdenticallyZero() &&
                          spec.c3.IsIdenticallyZero() &&
                          spec.d0.IsIdenticallyZero();
  switch (target) {
    case ReductionTarget::kBsde:
      return no_backward_noise && no_forward;
    case ReductionTarget::kBdsde:
      return no_forward;
    case ReductionTarget::kFbsde:
      return no_backward_noise;
  }
  return false;
}

GeneralCoefficients LinearQuadraticCoefficients(const LqGameSpec& spec) {
  GeneralCoefficients gc;
  gc.f = [spec](double t, const GameState& s, const ControlPair&) {
    return spec.c0(t) + spec.c1(t) * s.y + spec.c2(t) * s.Y + spec.c3(t) * s.Z;
  };
  gc.fbar = [spec](double t, const GameState&, const ControlPair&) {
    return spec.d0(t);
  };
  gc.g = [spec](double t, const GameState& s, const ControlPair& c) {
    return spec.a0(t) + spec.a1(t) * s.Y + spec.a2(t) * s.Z +
           spec.a3(t) * c.v1 + spec.a4(t) * c.v2;
  };
  gc.gbar = [spec](double t, const GameState&, const ControlPair&) {
    return spec.b0(t);
  };
  gc.phi = [M = spec.M](double Y0) { return M * Y0; };
  for (int i = 1; i <= 2; ++i) {
    gc.l[i - 1] = [spec, i](double t, const GameState& s, const ControlPair& c) {
      return -0.5 * (spec.weight(i, 1)(t) * s.y * s.y +
                     spec.weight(i, 2)(t) * s.z * s.z +
                     spec.weight(i, 3)(t) * s.Y * s.Y +
                     spec.weight(i, 4)(t) * s.Z * s.Z +
                     spec.weight(i, 7)(t) * c[i] * c[i]);
    };
    const double e5 = spec.weight(i, 5)(spec.horizon);
    const double e6 = spec.weight(i, 6)(0.0);
    gc.gamma[i - 1] = [e5](double yT) { return -0.5 * e5 * yT * yT; };
    gc.phi_payoff[i - 1] = [e6](double Y0) { return -0.5 * e6 * Y0 * Y0; };
  }
  return gc;
}

}  // namespace fbdsde
