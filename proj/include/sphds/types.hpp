#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sphds {

using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double inf_norm(const Vector& a);
bool all_finite(const Vector& a);
Vector concat(const Vector& a, const Vector& b);

/// State of a two-time-scale system: x is the slow block, z the fast block.
struct SlowFastState {
  Vector x;
  Vector z;

  Vector flat() const { return concat(x, z); }
  static SlowFastState split(const Vector& y, std::size_t n1);
};

/// A point (t, j) of a hybrid time domain: t is elapsed flow time, j the
/// number of jumps taken so far.
struct HybridTime {
  double t = 0.0;
  int j = 0;

  double total() const { return t + static_cast<double>(j); }
};

/// Finite representation of one evaluation of a set-valued map. `values`
/// lists selections; when `convexified` is set the represented set is the
/// closed convex hull of the values, otherwise the values themselves.
struct SelectionBundle {
  std::vector<Vector> values;
  bool convexified = false;

  bool empty() const { return values.empty(); }
  std::size_t size() const { return values.size(); }
};

/// A set given by a membership test plus an optional signed proximity
/// function (negative inside, positive outside). Built-in sets supply the
/// exact signed Euclidean distance, which event localization and
/// distance-to-target computations rely on.
struct SetPredicate {
  std::function<bool(const Vector&)> member;
  std::function<double(const Vector&)> proximity;  // may be empty
  std::optional<std::pair<Vector, Vector>> bounds;  // bounding box when known

  bool contains(const Vector& y, double tol = 0.0) const;
  bool has_proximity() const { return static_cast<bool>(proximity); }
  /// max(proximity, 0); requires a proximity function.
  double distance(const Vector& y) const;
};

/// Membership at tolerance: the proximity test when one is supplied,
/// the raw membership test otherwise. Monotone in tol by construction.
bool set_membership(const Vector& y, const SetPredicate& pred, double tol);

struct ArcNode {
  double t = 0.0;
  Vector y;
};

/// One flow interval of a hybrid arc at fixed jump count.
struct ArcSegment {
  int jump_index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<ArcNode> nodes;
};

struct JumpPoint {
  HybridTime when;  // (t, j) of the pre-jump state; post lives at (t, j+1)
  Vector pre;
  Vector post;
};

/// A hybrid arc: ordered flow segments interleaved with jumps. The domain
/// ordering invariant (segments consecutive in j, flow times chained,
/// finite states) is checked by validate().
struct HybridArc {
  std::vector<ArcSegment> segments;
  std::vector<JumpPoint> jumps;

  /// Returns an explanation of the first violated domain invariant, or
  /// nullopt when the arc is a valid hybrid time domain.
  std::optional<std::string> validate() const;

  /// Supremum of t + j over the domain.
  double end_total_time() const;

  /// All states in hybrid-time order as (t, j, y), including jump posts.
  std::vector<std::tuple<double, int, Vector>> all_nodes() const;
};

}  // namespace sphds
