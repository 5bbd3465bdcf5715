#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sphds/rng.hpp"
#include "sphds/types.hpp"

namespace sphds {

/// Distribution of the i.i.d. jump inputs: either a finite list of atoms
/// with probabilities or a uniform draw on an axis-aligned box. One call to
/// sample() consumes one logical event from the stream.
struct JumpInputDistribution {
  enum class Kind { finite_support, uniform_box };

  Kind kind = Kind::finite_support;
  std::vector<Vector> atoms;
  std::vector<double> probs;
  Vector lo, hi;

  int dim() const;
  void validate() const;  // throws std::invalid_argument on malformed specs
  bool is_finite_support() const { return kind == Kind::finite_support; }

  /// Inverse-CDF on a single uniform in [0,1): deterministic kernel used by
  /// sample() for finite supports, exposed for forcing specific draws.
  Vector sample_from_uniform(double u) const;
  Vector sample(RandomStream& stream) const;
};

/// Two-time-scale stochastic hybrid system with constrained flows
///   (x, z) in C:  dx/dt in F_x(x, z),  eps dz/dt in F_z(x, z)
/// and constrained random jumps
///   (x, z) in D:  (x+, z+) in G(x, z, v),  v ~ jump_input.
/// The flow and jump sets are products C = C_x x C_z, D = D_x x D_z.
/// All maps must be pure: same input, same output.
struct SystemDefinition {
  int n1 = 0;
  int n2 = 0;

  std::function<SelectionBundle(const Vector& x, const Vector& z)> flow_x;
  std::function<SelectionBundle(const Vector& x, const Vector& z)> flow_z;
  std::function<SelectionBundle(const Vector& x, const Vector& z, const Vector& v)> jump;
  /// Quasi-steady-state map M of the fast block (values of dimension n2);
  /// single valued systems use a one-selection bundle.
  std::function<SelectionBundle(const Vector& x)> qss;

  SetPredicate flow_set_x, flow_set_z;  // C = C_x x C_z
  SetPredicate jump_set_x, jump_set_z;  // D = D_x x D_z
  SetPredicate flow_set, jump_set;      // products over the full state

  JumpInputDistribution jump_input;

  SlowFastState split(const Vector& y) const { return SlowFastState::split(y, n1); }
  SelectionBundle eval_flow_x(const Vector& y) const;
  SelectionBundle eval_flow_z(const Vector& y) const;
  SelectionBundle eval_jump(const Vector& y, const Vector& v) const;
  /// First selection of M(x); throws when M(x) is empty.
  Vector qss_point(const Vector& x) const;
};

/// Builds the product predicate over (a-block, b-block) states.
SetPredicate product_set(const SetPredicate& a, int dim_a, const SetPredicate& b, int dim_b);

/// Built-in set vocabulary; proximity functions are exact signed Euclidean
/// distances except for make_all_set, whose proximity is the constant -1.
SetPredicate make_all_set(int dim);
SetPredicate make_box_set(Vector lo, Vector hi);
SetPredicate make_ball_set(Vector center, double radius);
SetPredicate make_ball_complement_set(Vector center, double radius);
SetPredicate make_halfspace_set(Vector normal, double offset);  // normal . y <= offset

/// Distance from z to the finite selection set M(x).
struct QssDistance {
  double value = 0.0;
  /// Set when the bundle represents a convex hull with more than one vertex:
  /// the vertex minimum can then overestimate the distance to the hull.
  bool over_approximation = false;
};

QssDistance distance_to_quasi_steady_state(const Vector& x, const Vector& z,
                                           const SelectionBundle& qss_at_x);

/// Slow-system reduction: flows restricted to z in M(x) and convexified,
/// jumps projected to the slow block over fast states sampled in D_z.
struct ReducedSystem {
  std::function<SelectionBundle(const Vector& x)> flow;                    // F~
  std::function<SelectionBundle(const Vector& x, const Vector& v)> jump;   // G~
  SetPredicate flow_set_x, jump_set_x;
};

struct ReducedBuildOptions {
  /// Fast-block probe points per slow point when projecting the jump map.
  int z_samples_per_x = 4;
  /// Probe box for those samples; required unless D_z carries bounds.
  std::optional<std::pair<Vector, Vector>> z_probe_box;
  /// Add pairwise midpoints and the centroid to the convexified flow bundle.
  bool interior_combinations = true;
};

ReducedSystem build_reduced_system(const SystemDefinition& sys, const ReducedBuildOptions& opts);

/// Sampling-based screen of the standing well-posedness requirements:
/// set proximity consistency, nonempty locally bounded maps on their
/// domains, convexified flags on multi-valued flow bundles. A pass is
/// evidence, not a proof.
struct BasicConditionsProbe {
  Vector box_lo, box_hi;
  int n_probes = 1000;
  std::uint64_t seed = 0;
  double epsilon = 1.0;  // time-scale parameter used for the flow bound
};

struct BasicConditionsReport {
  bool pass = true;
  double max_flow_norm = 0.0;   // sup-norm bound of (F_x, F_z/eps) over probes
  double max_jump_norm = 0.0;   // sup-norm bound of G over probed jump points
  int n_probes = 0;
  std::vector<std::string> failures;  // each entry includes a witness
};

BasicConditionsReport validate_basic_conditions(const SystemDefinition& sys,
                                                const BasicConditionsProbe& probe);

}  // namespace sphds
