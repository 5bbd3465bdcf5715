#include "sphds/executor.hpp"

#include <sstream>
#include <stdexcept>

namespace sphds {

void ExecConfig::validate() const {
  flow.validate();
  if (J_max < 0) throw std::invalid_argument("J_max must be nonnegative");
  if (T_total <= 0.0) throw std::invalid_argument("T_total must be positive");
  if (overlap.kind == OverlapPolicy::Kind::bernoulli && (overlap.p < 0.0 || overlap.p > 1.0))
    throw std::invalid_argument("bernoulli overlap probability must be in [0, 1]");
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::complete_horizon: return "complete_horizon";
    case StopReason::stopped_outside_C_union_D: return "stopped_outside_C_union_D";
    case StopReason::blow_up: return "blow_up";
    case StopReason::jump_budget_exhausted: return "jump_budget_exhausted";
  }
  return "?";
}

Vector sample_jump_input(const JumpInputDistribution& dist, RandomStream& stream) {
  dist.validate();
  return dist.sample(stream);
}

Vector apply_jump(const SystemDefinition& sys, const Vector& y, const Vector& v,
                  const SelectionPolicy& policy, RandomStream* stream, double tol) {
  if (!sys.jump_set.contains(y, tol))
    throw std::invalid_argument("apply_jump: state outside jump set");
  auto bundle = sys.eval_jump(y, v);
  if (bundle.empty()) throw std::invalid_argument("jump map empty on jump set");
  return select_from_bundle(bundle, policy, stream);
}

OverlapAction resolve_overlap(const OverlapPolicy& policy, RandomStream& stream) {
  switch (policy.kind) {
    case OverlapPolicy::Kind::prefer_jump: return OverlapAction::jump;
    case OverlapPolicy::Kind::prefer_flow: return OverlapAction::flow;
    case OverlapPolicy::Kind::bernoulli:
      return stream.next_uniform() < policy.p ? OverlapAction::jump : OverlapAction::flow;
  }
  return OverlapAction::jump;
}

RandomSolutionRecord solve(const SystemDefinition& sys, const Vector& y0, double epsilon,
                           const ExecConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double tol = cfg.flow.tol_event;
  if (!sys.flow_set.contains(y0, tol) && !sys.jump_set.contains(y0, tol))
    throw std::invalid_argument("no solution from initial condition: y0 outside C union D");

  RandomSolutionRecord rec;
  rec.seed = seed;
  rec.n1 = sys.n1;
  auto stream = RandomStream::from_seed(seed);

  Vector y = y0;
  double t = 0.0;
  int j = 0;
  bool after_flow_exit = false;  // the last segment ended by leaving C

  while (true) {
    if (t + static_cast<double>(j) >= cfg.T_total - 1e-15) {
      rec.stop_reason = StopReason::complete_horizon;
      break;
    }
    const bool in_C = sys.flow_set.contains(y, tol);
    const bool in_D = sys.jump_set.contains(y, tol);

    OverlapAction act;
    if (after_flow_exit) {
      // Flowing on is not viable from here; jump if permitted, else stop.
      if (!in_D) {
        rec.stop_reason = StopReason::stopped_outside_C_union_D;
        rec.boundary_flagged = true;
        break;
      }
      act = OverlapAction::jump;
      after_flow_exit = false;
    } else if (in_D && in_C) {
      act = resolve_overlap(cfg.overlap, stream);
    } else if (in_D) {
      act = OverlapAction::jump;
    } else if (in_C) {
      act = OverlapAction::flow;
    } else {
      rec.stop_reason = StopReason::stopped_outside_C_union_D;
      rec.boundary_flagged = true;
      break;
    }

    if (act == OverlapAction::jump) {
      if (j >= cfg.J_max) {
        rec.stop_reason = StopReason::jump_budget_exhausted;
        break;
      }
      Vector v = sample_jump_input(sys.jump_input, stream);
      Vector y_plus = apply_jump(sys, y, v, cfg.jump_selection, &stream, tol);
      rec.arc.jumps.push_back({HybridTime{t, j}, y, y_plus});
      rec.inputs.push_back(std::move(v));
      y = std::move(y_plus);
      ++j;
      continue;
    }

    FlowOptions fopts = cfg.flow;
    fopts.T_max = std::min(cfg.flow.T_max, cfg.T_total - (t + static_cast<double>(j)));
    const bool watch = cfg.overlap.kind != OverlapPolicy::Kind::prefer_flow;
    FlowSegment seg = integrate_flow(sys, y, epsilon, fopts, t, watch, /*skip_initial=*/in_D,
                                     &stream);
    // A segment that merely exhausted its per-segment budget continues the
    // same flow interval: keep one arc segment per jump index.
    if (!rec.arc.segments.empty() && rec.arc.segments.back().jump_index == j &&
        rec.arc.segments.back().t_end == seg.nodes.front().t) {
      auto& prev = rec.arc.segments.back();
      prev.nodes.insert(prev.nodes.end(), seg.nodes.begin() + 1, seg.nodes.end());
      prev.t_end = seg.t_end();
    } else {
      rec.arc.segments.push_back(ArcSegment{j, seg.nodes.front().t, seg.nodes.back().t, seg.nodes});
    }
    t = seg.t_end();
    y = seg.terminal_state();

    switch (seg.terminal_reason) {
      case FlowTerminal::entered_jump_set:
        break;  // next iteration decides between flow and jump
      case FlowTerminal::left_flow_set:
        after_flow_exit = true;
        break;
      case FlowTerminal::reached_T_max:
        break;  // horizon test at the top of the loop
      case FlowTerminal::blow_up:
        rec.stop_reason = StopReason::blow_up;
        return rec;
    }
  }
  return rec;
}

nlohmann::json RandomSolutionRecord::to_json() const {
  nlohmann::json doc;
  doc["seed"] = seed;
  doc["stop_reason"] = to_string(stop_reason);
  doc["boundary_flagged"] = boundary_flagged;
  doc["n_jumps"] = inputs.size();
  doc["inputs"] = inputs;
  doc["end_total_time"] = arc.end_total_time();
  return doc;
}

std::string RandomSolutionRecord::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  auto nodes = arc.all_nodes();
  if (nodes.empty()) return "";
  const std::size_t dim = std::get<2>(nodes.front()).size();
  os << "t,j";
  for (std::size_t i = 0; i < dim; ++i) {
    if (i < static_cast<std::size_t>(n1))
      os << ",x" << i;
    else
      os << ",z" << (i - static_cast<std::size_t>(n1));
  }
  os << "\n";
  double last_t = -1.0;
  int last_j = -1;
  const Vector* last_y = nullptr;
  for (const auto& [t, j, y] : nodes) {
    if (last_y && t == last_t && j == last_j && y == *last_y) continue;
    os << t << "," << j;
    for (double v : y) os << "," << v;
    os << "\n";
    last_t = t;
    last_j = j;
    last_y = &y;
  }
  return os.str();
}

}  // namespace sphds
