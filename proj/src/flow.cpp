#include "sphds/flow.hpp"

#include <cmath>
#include <stdexcept>

namespace sphds {

Vector select_from_bundle(const SelectionBundle& bundle, const SelectionPolicy& policy,
                          RandomStream* stream) {
  if (bundle.empty()) throw std::invalid_argument("cannot select from empty bundle");
  FrozenSelection sel;
  switch (policy.kind) {
    case SelectionPolicy::Kind::first:
      break;
    case SelectionPolicy::Kind::index:
      sel.index = policy.index;
      break;
    case SelectionPolicy::Kind::random_per_step:
      if (!stream) throw std::invalid_argument("random selection policy needs a stream");
      sel.random = true;
      sel.u = stream->next_uniform();
      break;
  }
  return sel.pick(bundle);
}

Vector FrozenSelection::pick(const SelectionBundle& bundle) const {
  if (bundle.empty()) throw std::invalid_argument("cannot select from empty bundle");
  std::size_t i;
  if (random) {
    i = std::min(bundle.size() - 1, static_cast<std::size_t>(u * static_cast<double>(bundle.size())));
  } else {
    if (index < 0 || static_cast<std::size_t>(index) >= bundle.size())
      throw std::invalid_argument("selection index out of range");
    i = static_cast<std::size_t>(index);
  }
  return bundle.values[i];
}

void FlowOptions::validate() const {
  if (h_base <= 0.0) throw std::invalid_argument("h_base must be positive");
  if (fast_substep_factor < 1) throw std::invalid_argument("fast_substep_factor must be >= 1");
  if (tol_event <= 0.0) throw std::invalid_argument("tol_event must be positive");
  if (T_max <= 0.0) throw std::invalid_argument("T_max must be positive");
}

double FlowOptions::effective_step(double epsilon) const {
  return std::min(h_base, epsilon * h_base / static_cast<double>(fast_substep_factor));
}

const char* to_string(FlowTerminal t) {
  switch (t) {
    case FlowTerminal::entered_jump_set: return "entered_jump_set";
    case FlowTerminal::left_flow_set: return "left_flow_set";
    case FlowTerminal::reached_T_max: return "reached_T_max";
    case FlowTerminal::blow_up: return "blow_up";
  }
  return "?";
}

namespace {

FrozenSelection resolve_selection(const SelectionPolicy& policy, RandomStream* stream) {
  FrozenSelection sel;
  switch (policy.kind) {
    case SelectionPolicy::Kind::first:
      break;
    case SelectionPolicy::Kind::index:
      sel.index = policy.index;
      break;
    case SelectionPolicy::Kind::random_per_step:
      if (!stream) throw std::invalid_argument("random selection policy needs a stream");
      sel.random = true;
      sel.u = stream->next_uniform();
      break;
  }
  return sel;
}

void eval_rhs(const SystemDefinition& sys, double epsilon, const FrozenSelection& sel,
              const Vector& y, Vector& out) {
  auto s = sys.split(y);
  Vector fx = sel.pick(sys.flow_x(s.x, s.z));
  Vector fz = sel.pick(sys.flow_z(s.x, s.z));
  out.resize(y.size());
  for (std::size_t i = 0; i < fx.size(); ++i) out[i] = fx[i];
  for (std::size_t i = 0; i < fz.size(); ++i) out[fx.size() + i] = fz[i] / epsilon;
}

Vector rk4_step(const SystemDefinition& sys, double epsilon, const FrozenSelection& sel,
                const Vector& y, double h) {
  const std::size_t n = y.size();
  Vector k1, k2, k3, k4, tmp(n);
  eval_rhs(sys, epsilon, sel, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  eval_rhs(sys, epsilon, sel, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  eval_rhs(sys, epsilon, sel, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  eval_rhs(sys, epsilon, sel, tmp, k4);
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace

std::pair<double, Vector> localize_event(const SystemDefinition& sys, double epsilon,
                                         const EventBracket& bracket,
                                         const std::function<bool(const Vector&)>& target,
                                         double tol_event, const FrozenSelection& selection,
                                         const std::function<double(const Vector&)>& proximity) {
  if (target(bracket.before.y)) return {bracket.before.t, bracket.before.y};
  if (!target(bracket.after.y))
    throw std::invalid_argument("event bracket invalid: predicate holds at neither node");

  ArcNode lo = bracket.before, hi = bracket.after;
  for (int iter = 0; iter < 200; ++iter) {
    bool narrow_enough = (hi.t - lo.t) <= tol_event &&
                         (!proximity || std::fabs(proximity(hi.y)) <= tol_event);
    if (narrow_enough) break;
    double tm = 0.5 * (lo.t + hi.t);
    if (tm <= lo.t || tm >= hi.t) break;  // bracket at floating-point resolution
    Vector ym = rk4_step(sys, epsilon, selection, lo.y, tm - lo.t);
    if (target(ym)) {
      hi = {tm, std::move(ym)};
    } else {
      lo = {tm, std::move(ym)};
    }
  }
  return {hi.t, hi.y};
}

FlowSegment integrate_flow(const SystemDefinition& sys, const Vector& y0, double epsilon,
                           const FlowOptions& opts, double t0, bool watch_jump_set,
                           bool skip_initial_jump_check, RandomStream* stream) {
  opts.validate();
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  if (!sys.flow_set.contains(y0, opts.tol_event))
    throw std::invalid_argument("flow started outside flow set");

  const auto& C = sys.flow_set;
  const auto& D = sys.jump_set;
  auto in_D = [&D](const Vector& y) { return D.contains(y, 0.0); };
  auto outside_C = [&C](const Vector& y) {
    return C.proximity ? C.proximity(y) > 0.0 : !C.member(y);
  };

  FlowSegment seg;
  seg.nodes.push_back({t0, y0});

  if (watch_jump_set && !skip_initial_jump_check && in_D(y0)) {
    seg.terminal_reason = FlowTerminal::entered_jump_set;
    return seg;
  }

  const double h = opts.effective_step(epsilon);
  const double t_stop = t0 + opts.T_max;

  while (true) {
    const double t = seg.nodes.back().t;
    if (t >= t_stop - 1e-15) {
      seg.terminal_reason = FlowTerminal::reached_T_max;
      return seg;
    }
    const Vector& y = seg.nodes.back().y;
    const double h_step = std::min(h, t_stop - t);
    FrozenSelection sel = resolve_selection(opts.selection, stream);
    Vector y_next = rk4_step(sys, epsilon, sel, y, h_step);
    const double t_next = t + h_step;

    if (!all_finite(y_next)) {
      seg.terminal_reason = FlowTerminal::blow_up;
      return seg;  // last finite node stays terminal
    }
    if (inf_norm(y_next) > kBlowUpBound) {
      seg.nodes.push_back({t_next, std::move(y_next)});
      seg.terminal_reason = FlowTerminal::blow_up;
      return seg;
    }

    const bool was_in_D = in_D(y);
    const bool hit_D = watch_jump_set && in_D(y_next);
    const bool exit_C = outside_C(y_next);

    if (hit_D && was_in_D) {
      // Flowing inside the jump set after an overlap decision: every step
      // end is a fresh decision point for the caller.
      seg.nodes.push_back({t_next, std::move(y_next)});
      seg.terminal_reason = FlowTerminal::entered_jump_set;
      return seg;
    }

    if (hit_D || exit_C) {
      EventBracket bracket{{t, y}, {t_next, y_next}};
      double t_d = 0.0, t_c = 0.0;
      Vector y_d, y_c;
      if (hit_D)
        std::tie(t_d, y_d) = localize_event(sys, epsilon, bracket, in_D, opts.tol_event, sel,
                                            D.proximity);
      if (exit_C)
        std::tie(t_c, y_c) = localize_event(sys, epsilon, bracket, outside_C, opts.tol_event, sel,
                                            C.proximity);
      // Simultaneous crossings resolve to the jump set; the executor owns
      // the flow-or-jump decision there.
      if (hit_D && (!exit_C || t_d <= t_c + opts.tol_event)) {
        if (t_d > t) seg.nodes.push_back({t_d, std::move(y_d)});
        seg.terminal_reason = FlowTerminal::entered_jump_set;
      } else {
        if (t_c > t) seg.nodes.push_back({t_c, std::move(y_c)});
        seg.terminal_reason = FlowTerminal::left_flow_set;
      }
      return seg;
    }

    seg.nodes.push_back({t_next, std::move(y_next)});
  }
}

}  // namespace sphds
