#pragma once

#include <utility>
#include <vector>

namespace fbdsde {

/// A deterministic scalar function of time, restricted to kinds whose
/// integrals and extrema on an interval are exactly computable.
///
/// - constant: value
/// - piecewise-constant: sorted (breakpoint, value) pairs, right-continuous;
///   the first breakpoint must be 0 and the value holds until the next one.
/// - polynomial: c0 + c1 t + c2 t^2 + ...
class CoefficientFn {
 public:
  enum class Kind { kConstant, kPiecewiseConstant, kPolynomial };

  CoefficientFn() : CoefficientFn(0.0) {}
  // Implicit on purpose so that `spec.a1 = 0.3;` reads naturally.
  CoefficientFn(double value);  // NOLINT

  static CoefficientFn Constant(double value);
  static CoefficientFn Piecewise(std::vector<std::pair<double, double>> steps);
  static CoefficientFn Polynomial(std::vector<double> coefficients);

  Kind kind() const { return kind_; }
  const std::vector<std::pair<double, double>>& steps() const { return steps_; }
  const std::vector<double>& coefficients() const { return coefficients_; }

  double operator()(double t) const;

  /// Exact integral over [a, b].
  double Integral(double a, double b) const;

  /// Exact minimum / maximum over [a, b] (polynomial extrema from the real
  /// roots of the derivative).
  double MinOn(double a, double b) const;
  double MaxOn(double a, double b) const;

  bool IsFiniteOn(double a, double b) const;
  bool IsIdenticallyZero() const;

  /// Pointwise product with a scalar; keeps the kind.
  CoefficientFn Scaled(double factor) const;

  bool operator==(const CoefficientFn& other) const = default;

 private:
  std::vector<double> CandidatePoints(double a, double b) const;

  Kind kind_ = Kind::kConstant;
  std::vector<std::pair<double, double>> steps_;
  std::vector<double> coefficients_;
};

}  // namespace fbdsde
