#pragma once

#include <string>

#include "sphds/certificates.hpp"
#include "sphds/executor.hpp"
#include "sphds/montecarlo.hpp"
#include "sphds/system.hpp"

#include "json.hpp"

namespace sphds {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// A fully materialized problem: system, certificate, execution and
/// verification defaults, plus the source document it was built from.
/// Built-in examples and user config files share this loader, so a
/// loaded emitted config reproduces the built-in bit for bit.
struct LoadedProblem {
  std::string name;
  SystemDefinition system;
  CertificateBundle certificate;
  ExecConfig execution;
  CheckOptions verification;
  StabilityProbeConfig stability;
  RecurrenceConfig recurrence;
  double default_epsilon = 0.1;
  nlohmann::json source;
};

/// Parses a config document: sections {system, certificate, execution,
/// verification, montecarlo}. Maps use the built-in expression vocabulary
/// (const/var/poly/poly1/sum/max/min/norm_of/abs); sets use
/// all/box/ball/ball_complement/halfspace; distributions are finite-support
/// or uniform-on-box. Throws std::invalid_argument with a diagnostic on
/// malformed input.
LoadedProblem load_problem(const nlohmann::json& doc);
LoadedProblem load_problem_file(const std::string& path);

/// Set predicate from a config node, over vectors of the given dimension.
SetPredicate load_set(const nlohmann::json& spec, int dim);

}  // namespace sphds
