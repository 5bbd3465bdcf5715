#include "sphds/types.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace sphds {

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

double inf_norm(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

bool all_finite(const Vector& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

Vector concat(const Vector& a, const Vector& b) {
  Vector y;
  y.reserve(a.size() + b.size());
  y.insert(y.end(), a.begin(), a.end());
  y.insert(y.end(), b.begin(), b.end());
  return y;
}

SlowFastState SlowFastState::split(const Vector& y, std::size_t n1) {
  if (y.size() < n1) throw std::invalid_argument("state shorter than slow block");
  return SlowFastState{Vector(y.begin(), y.begin() + n1), Vector(y.begin() + n1, y.end())};
}

bool SetPredicate::contains(const Vector& y, double tol) const {
  return set_membership(y, *this, tol);
}

double SetPredicate::distance(const Vector& y) const {
  if (!proximity) throw std::invalid_argument("set has no proximity function");
  return std::max(proximity(y), 0.0);
}

bool set_membership(const Vector& y, const SetPredicate& pred, double tol) {
  if (tol < 0.0) throw std::invalid_argument("set membership tolerance must be nonnegative");
  if (pred.proximity) return pred.proximity(y) <= tol;
  return pred.member(y);
}

std::optional<std::string> HybridArc::validate() const {
  double t_cursor = segments.empty() ? 0.0 : segments.front().t_start;
  int j_cursor = -1;
  for (const auto& seg : segments) {
    if (seg.jump_index <= j_cursor) return "segment jump indices not strictly increasing";
    j_cursor = seg.jump_index;
    if (seg.t_start < t_cursor - 1e-12) return "segment starts before previous segment end";
    if (seg.nodes.empty()) return "segment has no nodes";
    if (seg.nodes.front().t != seg.t_start || seg.nodes.back().t != seg.t_end)
      return "segment node times inconsistent with [t_start, t_end]";
    double prev = seg.t_start;
    for (std::size_t i = 0; i < seg.nodes.size(); ++i) {
      const auto& n = seg.nodes[i];
      if (i > 0 && n.t <= prev) return "node times not strictly increasing";
      prev = n.t;
      if (!all_finite(n.y)) return "non-finite state stored in arc";
    }
    t_cursor = seg.t_end;
  }
  int j_prev = -1;
  for (const auto& jp : jumps) {
    if (jp.when.j <= j_prev) return "jump indices not strictly increasing";
    j_prev = jp.when.j;
    if (!all_finite(jp.pre) || !all_finite(jp.post)) return "non-finite jump state";
  }
  return std::nullopt;
}

double HybridArc::end_total_time() const {
  double best = 0.0;
  if (!segments.empty())
    best = segments.back().t_end + static_cast<double>(segments.back().jump_index);
  if (!jumps.empty())
    best = std::max(best, jumps.back().when.t + static_cast<double>(jumps.back().when.j + 1));
  return best;
}

std::vector<std::tuple<double, int, Vector>> HybridArc::all_nodes() const {
  std::vector<std::tuple<double, int, Vector>> out;
  std::size_t si = 0, ji = 0;
  while (si < segments.size() || ji < jumps.size()) {
    bool take_segment;
    if (si >= segments.size()) {
      take_segment = false;
    } else if (ji >= jumps.size()) {
      take_segment = true;
    } else {
      take_segment = segments[si].jump_index <= jumps[ji].when.j;
    }
    if (take_segment) {
      const auto& seg = segments[si++];
      for (const auto& n : seg.nodes) out.emplace_back(n.t, seg.jump_index, n.y);
    } else {
      const auto& jp = jumps[ji++];
      // A jump with no preceding flow at its index still contributes its
      // pre-state to the domain.
      if (out.empty() || !(std::get<0>(out.back()) == jp.when.t &&
                           std::get<1>(out.back()) == jp.when.j && std::get<2>(out.back()) == jp.pre))
        out.emplace_back(jp.when.t, jp.when.j, jp.pre);
      out.emplace_back(jp.when.t, jp.when.j + 1, jp.post);
    }
  }
  return out;
}

}  // namespace sphds
