#include "fbdsde/coefficient.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fbdsde/error.h"

namespace fbdsde {

CoefficientFn::CoefficientFn(double value)
    : kind_(Kind::kConstant), coefficients_{value} {}

CoefficientFn CoefficientFn::Constant(double value) {
  return CoefficientFn(value);
}

CoefficientFn CoefficientFn::Piecewise(
    std::vector<std::pair<double, double>> steps) {
  if (steps.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "piecewise coefficient needs at least one step");
  }
  if (steps.front().first != 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "piecewise coefficient must start at breakpoint 0");
  }
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (!(steps[i].first > steps[i - 1].first)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "piecewise breakpoints must be strictly increasing");
    }
  }
  CoefficientFn fn;
  fn.kind_ = Kind::kPiecewiseConstant;
  fn.coefficients_.clear();
  fn.steps_ = std::move(steps);
  return fn;
}

CoefficientFn CoefficientFn::Polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "polynomial coefficient needs at least one term");
  }
  CoefficientFn fn;
  fn.kind_ = Kind::kPolynomial;
  fn.coefficients_ = std::move(coefficients);
  return fn;
}

double CoefficientFn::operator()(double t) const {
  switch (kind_) {
    case Kind::kConstant:
      return coefficients_.front();
    case Kind::kPiecewiseConstant: {
      // Last breakpoint <= t; times before 0 take the first value.
      auto it = std::upper_bound(
          steps_.begin(), steps_.end(), t,
          [](double x, const auto& step) { return x < step.first; });
      if (it == steps_.begin()) return steps_.front().second;
      return std::prev(it)->second;
    }
    case Kind::kPolynomial: {
      double acc = 0.0;
      for (auto c = coefficients_.rbegin(); c != coefficients_.rend(); ++c) {
        acc = acc * t + *c;
      }
      return acc;
    }
  }
  return 0.0;
}

double CoefficientFn::Integral(double a, double b) const {
  switch (kind_) {
    case Kind::kConstant:
      return coefficients_.front() * (b - a);
    case Kind::kPiecewiseConstant: {
      double sign = 1.0;
      if (b < a) {
        std::swap(a, b);
        sign = -1.0;
      }
      double total = 0.0;
      for (std::size_t i = 0; i < steps_.size(); ++i) {
        const double lo = i == 0 ? -std::numeric_limits<double>::infinity()
                                 : steps_[i].first;
        const double hi = i + 1 < steps_.size()
                              ? steps_[i + 1].first
                              : std::numeric_limits<double>::infinity();
        const double from = std::max(a, lo);
        const double to = std::min(b, hi);
        if (to > from) total += steps_[i].second * (to - from);
      }
      return sign * total;
    }
    case Kind::kPolynomial: {
      double fa = 0.0;
      double fb = 0.0;
      for (std::size_t n = coefficients_.size(); n-- > 0;) {
        const double c = coefficients_[n] / static_cast<double>(n + 1);
        fa = fa * a + c;
        fb = fb * b + c;
      }
      return fb * b - fa * a;
    }
  }
  return 0.0;
}

std::vector<double> CoefficientFn::CandidatePoints(double a, double b) const {
  std::vector<double> points{a, b};
  if (kind_ == Kind::kPiecewiseConstant) {
    for (const auto& [breakpoint, value] : steps_) {
      if (breakpoint > a && breakpoint < b) points.push_back(breakpoint);
    }
  } else if (kind_ == Kind::kPolynomial) {
    // Drop vanishing leading terms, then take the real roots of the
    // derivative via its companion matrix.
    std::size_t degree = coefficients_.size() - 1;
    while (degree > 0 && coefficients_[degree] == 0.0) --degree;
    if (degree >= 2) {
      const std::size_t m = degree - 1;  // derivative degree
      const double lead = static_cast<double>(degree) * coefficients_[degree];
      Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
      for (std::size_t i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        companion(i, m - 1) =
            -static_cast<double>(i + 1) * coefficients_[i + 1] / lead;
      }
      Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
      for (const auto& root : solver.eigenvalues()) {
        if (std::abs(root.imag()) <= 1e-10 * (1.0 + std::abs(root.real())) &&
            root.real() > a && root.real() < b) {
          points.push_back(root.real());
        }
      }
    }
  }
  return points;
}

double CoefficientFn::MinOn(double a, double b) const {
  double best = std::numeric_limits<double>::infinity();
  for (double t : CandidatePoints(a, b)) best = std::min(best, (*this)(t));
  return best;
}

double CoefficientFn::MaxOn(double a, double b) const {
  double best = -std::numeric_limits<double>::infinity();
  for (double t : CandidatePoints(a, b)) best = std::max(best, (*this)(t));
  return best;
}

bool CoefficientFn::IsFiniteOn(double a, double b) const {
  for (double c : coefficients_) {
    if (!std::isfinite(c)) return false;
  }
  for (const auto& [breakpoint, value] : steps_) {
    if (!std::isfinite(breakpoint) || !std::isfinite(value)) return false;
  }
  return std::isfinite(MinOn(a, b)) && std::isfinite(MaxOn(a, b));
}

bool CoefficientFn::IsIdenticallyZero() const {
  switch (kind_) {
    case Kind::kConstant:
    case Kind::kPolynomial:
      return std::all_of(coefficients_.begin(), coefficients_.end(),
                         [](double c) { return c == 0.0; });
    case Kind::kPiecewiseConstant:
      return std::all_of(steps_.begin(), steps_.end(),
                         [](const auto& s) { return s.second == 0.0; });
  }
  return false;
}

CoefficientFn CoefficientFn::Scaled(double factor) const {
  CoefficientFn out = *this;
  for (double& c : out.coefficients_) c *= factor;
  for (auto& step : out.steps_) step.second *= factor;
  return out;
}

}  // namespace fbdsde
