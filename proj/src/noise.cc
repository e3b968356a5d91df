#include "fbdsde/noise.h"

#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>

#include "fbdsde/error.h"
#include "fbdsde/parallel.h"

namespace fbdsde {

namespace {

std::uint64_t Mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t StreamKey(std::uint64_t seed, std::uint64_t path,
                        std::uint64_t step, NoiseTag tag) {
  std::uint64_t h = Mix(seed);
  h = Mix(h ^ path);
  h = Mix(h ^ step);
  return Mix(h ^ static_cast<std::uint64_t>(tag));
}

// Uniform in (0, 1) with 53 random bits.
double ToOpenUnit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

TimeGrid::TimeGrid(double horizon, int steps)
    : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::kInvalidArgument, "grid horizon must be positive");
  }
  if (steps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs at least one step");
  }
}

double TimeGrid::time(int k) const {
  if (k == steps_) return horizon_;
  return k * dt();
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> out(steps_ + 1);
  for (int k = 0; k <= steps_; ++k) out[k] = time(k);
  return out;
}

TimeGrid MakeGrid(double horizon, int steps) { return TimeGrid(horizon, steps); }

double CounterNormal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                     NoiseTag tag) {
  const std::uint64_t key = StreamKey(seed, path, step, tag);
  const double u1 = ToOpenUnit(Mix(key));
  const double u2 = ToOpenUnit(Mix(key ^ 0x5851f42d4c957f2dULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

PathEnsemble::PathEnsemble(TimeGrid grid, int count, std::uint64_t seed)
    : grid_(grid), count_(count), seed_(seed) {
  if (count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "path count must be positive");
  }
  const std::size_t size = static_cast<std::size_t>(count) * grid_.steps();
  dw_.resize(size);
  db_.resize(size);
}

std::span<const double> PathEnsemble::dWPath(int path) const {
  return {dw_.data() + Index(path, 0), static_cast<std::size_t>(grid_.steps())};
}

std::span<const double> PathEnsemble::dBPath(int path) const {
  return {db_.data() + Index(path, 0), static_cast<std::size_t>(grid_.steps())};
}

std::vector<double> PathEnsemble::WPath(int path) const {
  std::vector<double> w(grid_.steps() + 1, 0.0);
  for (int k = 0; k < grid_.steps(); ++k) w[k + 1] = w[k] + dW(path, k);
  return w;
}

void PathEnsemble::WriteCsv(std::ostream& out) const {
  out << "path,k,t,dW,dB\n";
  const auto old_precision = out.precision(17);
  for (int j = 0; j < count_; ++j) {
    for (int k = 0; k < grid_.steps(); ++k) {
      out << j << ',' << k << ',' << grid_.time(k) << ',' << dW(j, k) << ','
          << dB(j, k) << '\n';
    }
  }
  out.precision(old_precision);
}

PathEnsemble SamplePaths(const TimeGrid& grid, int count, std::uint64_t seed) {
  PathEnsemble ensemble(grid, count, seed);
  const double scale = std::sqrt(grid.dt());
  double* dw = ensemble.dw_.data();
  double* db = ensemble.db_.data();
  const int steps = grid.steps();
  ParallelFor(static_cast<std::size_t>(count), [&](std::size_t j) {
    for (int k = 0; k < steps; ++k) {
      const std::size_t idx = j * steps + k;
      dw[idx] = scale * CounterNormal(seed, j, k, NoiseTag::kW);
      db[idx] = scale * CounterNormal(seed, j, k, NoiseTag::kB);
    }
  });
  return ensemble;
}

TreeNoise::TreeNoise(TimeGrid grid)
    : grid_(grid), sqrt_dt_(std::sqrt(grid.dt())) {
  if (grid.steps() > kMaxSteps) {
    throw Error(ErrorCode::kResourceLimit,
                "binary two-noise tree limited to N <= 12 (2N <= 24)");
  }
}

double TreeNoise::weight() const {
  return std::ldexp(1.0, -2 * steps());
}

double TreeNoise::W(std::uint64_t w, int k) const {
  const std::uint64_t prefix = w & ((std::uint64_t{1} << k) - 1);
  const int ups = std::popcount(prefix);
  return (2 * ups - k) * sqrt_dt_;
}

TreeNoise EnumerateTree(const TimeGrid& grid) { return TreeNoise(grid); }

double ForwardItoIntegral(std::span<const double> integrand,
                          std::span<const double> increments) {
  if (integrand.size() != increments.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "forward integral: integrand and increments differ in length");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    acc += integrand[k] * increments[k];
  }
  return acc;
}

double BackwardItoIntegral(std::span<const double> integrand,
                           std::span<const double> increments) {
  if (integrand.size() != increments.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "backward integral: integrand and increments differ in length");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    acc += integrand[k] * increments[k];
  }
  return acc;
}

}  // namespace fbdsde
