#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "sphds/system.hpp"

namespace sphds {

/// How one element of a selection bundle is chosen during simulation.
struct SelectionPolicy {
  enum class Kind { first, index, random_per_step };
  Kind kind = Kind::first;
  int index = 0;

  static SelectionPolicy first() { return {}; }
  static SelectionPolicy at(int k) { return {Kind::index, k}; }
  static SelectionPolicy random() { return {Kind::random_per_step, 0}; }
};

/// Deterministic policies pick the stated element; random-per-step maps one
/// uniform draw (owned by the caller) onto an index. Out-of-range indices
/// are a configuration error.
Vector select_from_bundle(const SelectionBundle& bundle, const SelectionPolicy& policy,
                          RandomStream* stream);

/// A selection rule resolved once per macro step: the same rule is replayed
/// when a step is re-integrated during event localization.
struct FrozenSelection {
  bool random = false;
  int index = 0;
  double u = 0.0;

  Vector pick(const SelectionBundle& bundle) const;
};

struct FlowOptions {
  double h_base = 0.01;
  int fast_substep_factor = 1;  // effective step = min(h_base, eps * h_base / factor)
  double tol_event = 1e-9;
  double T_max = 10.0;  // max flow duration of one segment
  SelectionPolicy selection = SelectionPolicy::first();

  void validate() const;
  double effective_step(double epsilon) const;
};

enum class FlowTerminal { entered_jump_set, left_flow_set, reached_T_max, blow_up };

const char* to_string(FlowTerminal t);

/// One integrated flow interval. Node times are absolute; every node is in
/// the flow set within tolerance, and for an entered_jump_set terminal the
/// last node is in the jump set.
struct FlowSegment {
  std::vector<ArcNode> nodes;
  FlowTerminal terminal_reason = FlowTerminal::reached_T_max;

  const Vector& terminal_state() const { return nodes.back().y; }
  double t_end() const { return nodes.back().t; }
  double duration() const { return nodes.back().t - nodes.front().t; }
};

/// State-norm threshold treated as a finite-escape candidate. Crossing it
/// ends the segment with a blow_up terminal, never a silent truncation.
inline constexpr double kBlowUpBound = 1e9;

/// Classical fixed-step 4th-order integration of the two-time-scale flow
///   dx/dt = f_x(x, z),  dz/dt = f_z(x, z) / eps
/// with the selection frozen per macro step. Stops at the first entry into
/// the jump set (when watched), exit from the flow set, T_max, or blow-up;
/// set crossings are localized by bisection to tol_event.
///
/// `watch_jump_set = false` lets a caller flow through the jump set;
/// `skip_initial_jump_check = true` suppresses the jump-set test on the
/// starting node only, so an overlap decision to flow makes progress.
FlowSegment integrate_flow(const SystemDefinition& sys, const Vector& y0, double epsilon,
                           const FlowOptions& opts, double t0 = 0.0, bool watch_jump_set = true,
                           bool skip_initial_jump_check = false, RandomStream* stream = nullptr);

struct EventBracket {
  ArcNode before;
  ArcNode after;
};

/// Bisects on re-integrated sub-steps until the bracket is at most
/// tol_event wide (in time, and in proximity when the target supplies one).
/// Returns the first state satisfying `target`, a member of the closed
/// target set at tol_event. A bracket whose start already satisfies the
/// target returns the start; a bracket whose end does not satisfy it is
/// invalid.
std::pair<double, Vector> localize_event(const SystemDefinition& sys, double epsilon,
                                         const EventBracket& bracket,
                                         const std::function<bool(const Vector&)>& target,
                                         double tol_event, const FrozenSelection& selection,
                                         const std::function<double(const Vector&)>& proximity = {});

}  // namespace sphds
