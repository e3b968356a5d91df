#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace fbdsde {

/// Uniform grid t_k = k * dt on [0, T], dt = T / N.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double dt() const { return horizon_ / steps_; }
  double time(int k) const;
  std::vector<double> nodes() const;

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  int steps_;
};

/// Throws kInvalidArgument for nonpositive T or N.
TimeGrid MakeGrid(double horizon, int steps);

enum class NoiseTag : std::uint64_t { kW = 0x57, kB = 0x42 };

/// Standard normal draw for the stream (seed, path, step, tag). Pure: the
/// value depends only on its arguments.
double CounterNormal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                     NoiseTag tag);

class PathEnsemble;

/// Gaussian increments with variance dt, deterministic in (grid, count, seed)
/// and independent of the worker count.
PathEnsemble SamplePaths(const TimeGrid& grid, int count, std::uint64_t seed);

/// Monte Carlo ensemble of increments of the two independent Brownian
/// motions W and B. Row-major: dW(j, k) for path j, step k.
class PathEnsemble {
 public:
  PathEnsemble(TimeGrid grid, int count, std::uint64_t seed);

  const TimeGrid& grid() const { return grid_; }
  int count() const { return count_; }
  std::uint64_t seed() const { return seed_; }

  double dW(int path, int step) const { return dw_[Index(path, step)]; }
  double dB(int path, int step) const { return db_[Index(path, step)]; }
  std::span<const double> dWPath(int path) const;
  std::span<const double> dBPath(int path) const;

  /// W(t_k) along a path, k = 0..N.
  std::vector<double> WPath(int path) const;

  /// CSV: path,k,t,dW,dB (one row per path and step).
  void WriteCsv(std::ostream& out) const;

  bool operator==(const PathEnsemble&) const = default;

 private:
  friend PathEnsemble SamplePaths(const TimeGrid&, int, std::uint64_t);

  std::size_t Index(int path, int step) const {
    return static_cast<std::size_t>(path) * grid_.steps() + step;
  }

  TimeGrid grid_;
  int count_;
  std::uint64_t seed_;
  std::vector<double> dw_;
  std::vector<double> db_;
};


/// Exhaustive binary model of the two noises: every scenario assigns signs
/// s^W_k, s^B_k in {+1, -1} to each step with increment s * sqrt(dt), and
/// all 2^(2N) scenarios carry weight 2^(-2N).
///
/// Scenarios are indexed by (w, b) with w, b in [0, 2^N); bit k of w set
/// means dW_k = +sqrt(dt), and likewise for b.
class TreeNoise {
 public:
  static constexpr int kMaxSteps = 12;

  explicit TreeNoise(TimeGrid grid);

  const TimeGrid& grid() const { return grid_; }
  int steps() const { return grid_.steps(); }
  double sqrt_dt() const { return sqrt_dt_; }
  std::uint64_t half_count() const { return std::uint64_t{1} << steps(); }
  std::uint64_t scenario_count() const { return half_count() * half_count(); }
  double weight() const;

  double dW(std::uint64_t w, int k) const { return Increment(w, k); }
  double dB(std::uint64_t b, int k) const { return Increment(b, k); }
  /// W(t_k) for the W-path w.
  double W(std::uint64_t w, int k) const;

 private:
  double Increment(std::uint64_t bits, int k) const {
    return ((bits >> k) & 1U) ? sqrt_dt_ : -sqrt_dt_;
  }

  TimeGrid grid_;
  double sqrt_dt_;
};

/// Throws kResourceLimit when 2N > 24.
TreeNoise EnumerateTree(const TimeGrid& grid);

/// Left-endpoint rule: sum_k integrand[k] * dW[k], integrand at t_0..t_{N-1}.
double ForwardItoIntegral(std::span<const double> integrand,
                          std::span<const double> increments);

/// Right-endpoint rule: sum_k integrand[k] * dB[k], where integrand holds the
/// values at t_1..t_N (so integrand[k] is the value at t_{k+1}).
double BackwardItoIntegral(std::span<const double> integrand,
                           std::span<const double> increments);

}  // namespace fbdsde
