#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sphds/flow.hpp"

#include "json.hpp"

namespace sphds {

/// What to do when the state sits in both the flow and the jump set.
struct OverlapPolicy {
  enum class Kind { prefer_jump, prefer_flow, bernoulli };
  Kind kind = Kind::prefer_jump;
  double p = 0.5;  // jump probability for the bernoulli policy

  static OverlapPolicy prefer_jump() { return {}; }
  static OverlapPolicy prefer_flow() { return {Kind::prefer_flow, 0.0}; }
  static OverlapPolicy bernoulli(double p) { return {Kind::bernoulli, p}; }
};

enum class OverlapAction { flow, jump };

struct ExecConfig {
  FlowOptions flow;
  int J_max = 10000;
  double T_total = 10.0;  // horizon on t + j
  OverlapPolicy overlap = OverlapPolicy::prefer_jump();
  SelectionPolicy jump_selection = SelectionPolicy::first();

  void validate() const;
};

enum class StopReason { complete_horizon, stopped_outside_C_union_D, blow_up, jump_budget_exhausted };

const char* to_string(StopReason r);

/// One random solution: the hybrid arc, the jump inputs it consumed in
/// order, the stream seed, and why execution stopped. Input k is drawn at
/// jump k and never earlier, so truncating and re-solving with the same
/// seed reproduces the input prefix exactly.
struct RandomSolutionRecord {
  HybridArc arc;
  std::vector<Vector> inputs;
  std::uint64_t seed = 0;
  StopReason stop_reason = StopReason::complete_horizon;
  int n1 = 0;  // slow-block dimension, for serialization
  /// Set when execution halted because neither flowing nor jumping was
  /// possible at tolerance (maximal but possibly boundary-tangent).
  bool boundary_flagged = false;

  nlohmann::json to_json() const;
  std::string to_csv() const;  // header t,j,x0..,z0..
};

/// One draw from the jump-input distribution; consumes exactly one logical
/// event from the stream.
Vector sample_jump_input(const JumpInputDistribution& dist, RandomStream& stream);

/// Applies the jump map at y (which must lie in D within tol) and selects
/// one element of G(x, z, v) by policy.
Vector apply_jump(const SystemDefinition& sys, const Vector& y, const Vector& v,
                  const SelectionPolicy& policy, RandomStream* stream, double tol = 1e-9);

/// Decision at a point of C and D overlap.
OverlapAction resolve_overlap(const OverlapPolicy& policy, RandomStream& stream);

/// Produces a complete random solution from y0 by alternating flow
/// segments and stochastic jumps. Fully deterministic given the seed;
/// stream events are consumed in the order: jump input, jump selection,
/// overlap decision, per-step flow selections.
RandomSolutionRecord solve(const SystemDefinition& sys, const Vector& y0, double epsilon,
                           const ExecConfig& cfg, std::uint64_t seed);

}  // namespace sphds
