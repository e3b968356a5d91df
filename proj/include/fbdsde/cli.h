#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fbdsde/model.h"

namespace fbdsde {

struct RunConfig {
  std::string spec_path;
  std::string command;
  int steps = 8;
  int paths = 10000;
  std::uint64_t seed = 42;
  double tol = 5e-3;
  std::string out_dir = "out";
  int threads = 0;  // 0: hardware concurrency
  std::string policy_path;
  bool dump_noise = false;
  bool dump_nodes = false;
};

using GameSpec = std::variant<LqGameSpec, ZeroSumSpec>;

struct ParsedConfig {
  RunConfig config;
  GameSpec spec;
};

/// Parses the key-value spec format:
///
///   # comment
///   type = nonzero-sum            (or zero-sum)
///   horizon = 1.0
///   info = w-filtration           (or full)
///   M = 0.5
///   kappa0 = 1.0
///   kappa1 = 0.5
///   a1 = {polynomial, 0.2, -0.1}
///   b0 = {piecewise, 0:0.3, 0.5:0.2}
///   e17 = {constant, 1.0}         (a bare number also means constant)
///
/// Nonzero-sum files take e11..e27, zero-sum files take l1..l6, r1, r2.
/// Omitted coefficients are zero. Optional run keys: depth, paths, seed, tol.
///
/// Throws kParse (message carries line:column) for malformed text and
/// kSchema (message names the field) for unknown, duplicate or missing keys.
/// Does not run ValidateSpec.
ParsedConfig ParseConfig(std::string_view text);

/// Text that ParseConfig maps back to an identical spec.
std::string SerializeSpec(const GameSpec& spec);

/// FNV-1a 64-bit hash.
std::uint64_t Fnv1a(std::string_view bytes);

/// Runs one CLI invocation (args excludes the program name). Data goes to
/// files under --out, diagnostics to `err`, short status lines to `out`.
/// Returns 0 on success or pass, 1 when a check fails, 2 on usage, parse or
/// schema errors, 3 on numerical breakdown.
int RunCommand(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err);

}  // namespace fbdsde
