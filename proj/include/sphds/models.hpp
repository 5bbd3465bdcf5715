#pragma once

#include <map>
#include <string>
#include <vector>

#include "sphds/config.hpp"

namespace sphds {

/// A built-in example system with a hand-derived certificate. The config
/// document is the source of truth: the problem is materialized through
/// the same loader the CLI uses, so emitted configs round-trip exactly.
struct NamedExample {
  std::string name;
  nlohmann::json config;
  LoadedProblem problem;
  double default_epsilon = 0.1;
  /// Expected checklist verdicts at the default epsilon (level-set
  /// heuristics supplied where the statement needs them).
  std::map<TheoremId, bool> expected;
  std::string notes;
};

std::vector<std::string> example_names();

/// Builds "linear-tracker", "weak-decrease" or "noisy-reset"; throws
/// std::invalid_argument for unknown names.
NamedExample make_example(const std::string& name);

}  // namespace sphds
