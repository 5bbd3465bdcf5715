#include "sphds/system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sphds {

namespace {

Vector slice(const Vector& y, std::size_t begin, std::size_t len) {
  return Vector(y.begin() + begin, y.begin() + begin + len);
}

std::string format_point(const Vector& y) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << ")";
  return os.str();
}

}  // namespace

int JumpInputDistribution::dim() const {
  if (kind == Kind::finite_support) return atoms.empty() ? 0 : static_cast<int>(atoms[0].size());
  return static_cast<int>(lo.size());
}

void JumpInputDistribution::validate() const {
  if (kind == Kind::finite_support) {
    if (atoms.empty() || atoms.size() != probs.size())
      throw std::invalid_argument("finite-support distribution needs matching atoms and probabilities");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0)
        throw std::invalid_argument("finite-support probabilities must be positive");
      if (atoms[i].size() != atoms[0].size())
        throw std::invalid_argument("finite-support atoms must share a dimension");
      total += probs[i];
    }
    if (std::fabs(total - 1.0) > 1e-12)
      throw std::invalid_argument("finite-support probabilities must sum to 1");
  } else {
    if (lo.empty() || lo.size() != hi.size())
      throw std::invalid_argument("uniform-box distribution needs matching bounds");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw std::invalid_argument("uniform-box bounds must be ordered");
  }
}

Vector JumpInputDistribution::sample_from_uniform(double u) const {
  if (kind != Kind::finite_support)
    throw std::invalid_argument("single-uniform sampling applies to finite supports only");
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    acc += probs[i];
    if (u < acc) return atoms[i];
  }
  return atoms.back();
}

Vector JumpInputDistribution::sample(RandomStream& stream) const {
  if (kind == Kind::finite_support) return sample_from_uniform(stream.next_uniform());
  Vector v(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) v[i] = stream.next_uniform(lo[i], hi[i]);
  return v;
}

SelectionBundle SystemDefinition::eval_flow_x(const Vector& y) const {
  auto s = split(y);
  return flow_x(s.x, s.z);
}

SelectionBundle SystemDefinition::eval_flow_z(const Vector& y) const {
  auto s = split(y);
  return flow_z(s.x, s.z);
}

SelectionBundle SystemDefinition::eval_jump(const Vector& y, const Vector& v) const {
  auto s = split(y);
  return jump(s.x, s.z, v);
}

Vector SystemDefinition::qss_point(const Vector& x) const {
  auto m = qss(x);
  if (m.empty())
    throw std::invalid_argument("quasi-steady-state map empty at x = " + format_point(x));
  return m.values.front();
}

SetPredicate product_set(const SetPredicate& a, int dim_a, const SetPredicate& b, int dim_b) {
  SetPredicate out;
  const std::size_t na = static_cast<std::size_t>(dim_a);
  const std::size_t nb = static_cast<std::size_t>(dim_b);
  out.member = [a, b, na, nb](const Vector& y) {
    return a.member(slice(y, 0, na)) && b.member(slice(y, na, nb));
  };
  if (a.proximity && b.proximity) {
    out.proximity = [a, b, na, nb](const Vector& y) {
      return std::max(a.proximity(slice(y, 0, na)), b.proximity(slice(y, na, nb)));
    };
  }
  if (a.bounds && b.bounds) {
    out.bounds = {concat(a.bounds->first, b.bounds->first),
                  concat(a.bounds->second, b.bounds->second)};
  }
  return out;
}

SetPredicate make_all_set(int dim) {
  (void)dim;
  SetPredicate s;
  s.member = [](const Vector&) { return true; };
  s.proximity = [](const Vector&) { return -1.0; };
  return s;
}

SetPredicate make_box_set(Vector lo, Vector hi) {
  SetPredicate s;
  s.bounds = {lo, hi};
  s.member = [lo, hi](const Vector& y) {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (y[i] < lo[i] || y[i] > hi[i]) return false;
    return true;
  };
  s.proximity = [lo, hi](const Vector& y) {
    double outside_sq = 0.0;
    double inside = -1e300;
    bool is_outside = false;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      double below = lo[i] - y[i], above = y[i] - hi[i];
      double excess = std::max(below, above);
      if (excess > 0.0) {
        is_outside = true;
        outside_sq += excess * excess;
      }
      inside = std::max(inside, excess);
    }
    return is_outside ? std::sqrt(outside_sq) : inside;
  };
  return s;
}

SetPredicate make_ball_set(Vector center, double radius) {
  SetPredicate s;
  Vector lo = center, hi = center;
  for (std::size_t i = 0; i < center.size(); ++i) {
    lo[i] -= radius;
    hi[i] += radius;
  }
  s.bounds = {lo, hi};
  s.member = [center, radius](const Vector& y) {
    Vector d = y;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= center[i];
    return norm(d) <= radius;
  };
  s.proximity = [center, radius](const Vector& y) {
    Vector d = y;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= center[i];
    return norm(d) - radius;
  };
  return s;
}

SetPredicate make_ball_complement_set(Vector center, double radius) {
  SetPredicate s;
  s.member = [center, radius](const Vector& y) {
    Vector d = y;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= center[i];
    return norm(d) >= radius;
  };
  s.proximity = [center, radius](const Vector& y) {
    Vector d = y;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= center[i];
    return radius - norm(d);
  };
  return s;
}

SetPredicate make_halfspace_set(Vector normal, double offset) {
  double scale = norm(normal);
  if (scale <= 0.0) throw std::invalid_argument("halfspace normal must be nonzero");
  SetPredicate s;
  s.member = [normal, offset](const Vector& y) { return dot(normal, y) <= offset; };
  s.proximity = [normal, offset, scale](const Vector& y) {
    return (dot(normal, y) - offset) / scale;
  };
  return s;
}

QssDistance distance_to_quasi_steady_state(const Vector& x, const Vector& z,
                                           const SelectionBundle& qss_at_x) {
  if (qss_at_x.empty())
    throw std::invalid_argument("quasi-steady-state map empty at x = " + format_point(x));
  double best = 1e300;
  for (const auto& w : qss_at_x.values) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      double d = z[i] - w[i];
      s += d * d;
    }
    best = std::min(best, std::sqrt(s));
  }
  return {best, qss_at_x.convexified && qss_at_x.size() > 1};
}

namespace {

// All convex-hull vertices of the slow flow over M(x), de-duplicated, plus
// optional interior combinations. Inequalities linear in the flow value are
// extremal at vertices; interior points exercise hull-membership checks.
SelectionBundle reduced_flow_at(const SystemDefinition& sys, const ReducedBuildOptions& opts,
                                const Vector& x) {
  auto m = sys.qss(x);
  if (m.empty())
    throw std::invalid_argument("quasi-steady-state map empty at x = " + format_point(x));
  SelectionBundle out;
  out.convexified = true;
  for (const auto& z : m.values) {
    auto fx = sys.flow_x(x, z);
    for (auto& f : fx.values)
      if (std::find(out.values.begin(), out.values.end(), f) == out.values.end())
        out.values.push_back(std::move(f));
  }
  if (opts.interior_combinations && out.values.size() > 1) {
    std::vector<Vector> extra;
    const auto& vs = out.values;
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j) {
        Vector mid = vs[i];
        for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (mid[k] + vs[j][k]);
        extra.push_back(std::move(mid));
      }
    Vector centroid(vs[0].size(), 0.0);
    for (const auto& v : vs)
      for (std::size_t k = 0; k < v.size(); ++k) centroid[k] += v[k] / static_cast<double>(vs.size());
    extra.push_back(std::move(centroid));
    for (auto& e : extra)
      if (std::find(out.values.begin(), out.values.end(), e) == out.values.end())
        out.values.push_back(std::move(e));
  }
  return out;
}

std::vector<Vector> fast_probe_points(const SystemDefinition& sys, const ReducedBuildOptions& opts) {
  std::pair<Vector, Vector> box;
  if (opts.z_probe_box) {
    box = *opts.z_probe_box;
  } else if (sys.jump_set_z.bounds) {
    box = *sys.jump_set_z.bounds;
  } else {
    Vector lo(static_cast<std::size_t>(sys.n2), -1.0), hi(static_cast<std::size_t>(sys.n2), 1.0);
    box = {lo, hi};
  }
  int k = std::max(1, opts.z_samples_per_x);
  std::vector<Vector> pts;
  for (int i = 0; i < k; ++i) {
    double a = (k == 1) ? 0.5 : static_cast<double>(i) / static_cast<double>(k - 1);
    Vector z(static_cast<std::size_t>(sys.n2));
    for (std::size_t d = 0; d < z.size(); ++d)
      z[d] = box.first[d] + a * (box.second[d] - box.first[d]);
    if (sys.jump_set_z.contains(z, 0.0)) pts.push_back(std::move(z));
  }
  return pts;
}

}  // namespace

ReducedSystem build_reduced_system(const SystemDefinition& sys, const ReducedBuildOptions& opts) {
  if (opts.z_samples_per_x < 1)
    throw std::invalid_argument("z_samples_per_x must be at least 1");
  ReducedSystem red;
  red.flow_set_x = sys.flow_set_x;
  red.jump_set_x = sys.jump_set_x;
  red.flow = [sys, opts](const Vector& x) { return reduced_flow_at(sys, opts, x); };
  auto z_points = fast_probe_points(sys, opts);
  red.jump = [sys, z_points](const Vector& x, const Vector& v) {
    SelectionBundle out;
    for (const auto& z : z_points) {
      auto g = sys.jump(x, z, v);
      for (const auto& full : g.values) {
        Vector s(full.begin(), full.begin() + sys.n1);
        if (std::find(out.values.begin(), out.values.end(), s) == out.values.end())
          out.values.push_back(std::move(s));
      }
    }
    return out;
  };
  return red;
}

BasicConditionsReport validate_basic_conditions(const SystemDefinition& sys,
                                                const BasicConditionsProbe& probe) {
  if (probe.n_probes < 1) throw std::invalid_argument("n_probes must be at least 1");
  BasicConditionsReport rep;
  rep.n_probes = probe.n_probes;
  auto stream = RandomStream::for_trial(probe.seed, 0x6a5ce5);
  auto fail = [&rep](const std::string& what, const Vector& y) {
    rep.pass = false;
    if (rep.failures.size() < 32) rep.failures.push_back(what + " at " + format_point(y));
  };

  const std::size_t dim = probe.box_lo.size();
  std::vector<Vector> input_probes;
  if (sys.jump_input.is_finite_support()) {
    input_probes = sys.jump_input.atoms;
  } else {
    for (int i = 0; i < 4; ++i) input_probes.push_back(sys.jump_input.sample(stream));
  }

  for (int p = 0; p < probe.n_probes; ++p) {
    Vector y(dim);
    for (std::size_t d = 0; d < dim; ++d)
      y[d] = stream.next_uniform(probe.box_lo[d], probe.box_hi[d]);

    // Proximity functions must agree in sign with the membership tests,
    // the operational stand-in for closedness of C and D.
    for (const auto* set : {&sys.flow_set, &sys.jump_set}) {
      if (!set->proximity) continue;
      bool mem = set->member(y);
      double prox = set->proximity(y);
      if (mem != (prox <= 1e-12) && std::fabs(prox) > 1e-9)
        fail("set membership and proximity disagree", y);
    }

    if (sys.flow_set.contains(y, 0.0)) {
      auto fx = sys.eval_flow_x(y);
      auto fz = sys.eval_flow_z(y);
      if (fx.empty() || fz.empty()) {
        fail("flow map empty on flow set", y);
        continue;
      }
      if (fx.size() > 1 && !fx.convexified) fail("multi-valued slow flow not convexified", y);
      if (fz.size() > 1 && !fz.convexified) fail("multi-valued fast flow not convexified", y);
      for (const auto& f : fx.values) {
        if (!all_finite(f)) fail("non-finite slow flow value", y);
        rep.max_flow_norm = std::max(rep.max_flow_norm, inf_norm(f));
      }
      for (const auto& f : fz.values) {
        if (!all_finite(f)) fail("non-finite fast flow value", y);
        rep.max_flow_norm = std::max(rep.max_flow_norm, inf_norm(f) / probe.epsilon);
      }
    }

    if (sys.jump_set.contains(y, 0.0)) {
      for (const auto& v : input_probes) {
        auto g = sys.eval_jump(y, v);
        if (g.empty()) {
          fail("jump map empty on jump set", y);
          continue;
        }
        for (const auto& gv : g.values) {
          if (!all_finite(gv)) fail("non-finite jump value", y);
          rep.max_jump_norm = std::max(rep.max_jump_norm, inf_norm(gv));
        }
      }
    }

    auto s = sys.split(y);
    if (sys.flow_set_x.contains(s.x, 0.0)) {
      auto m = sys.qss(s.x);
      if (m.empty()) {
        fail("quasi-steady-state map empty on C_x", y);
      } else {
        for (const auto& w : m.values)
          if (!sys.flow_set_z.contains(w, 1e-9)) fail("quasi-steady-state value outside C_z", y);
      }
    }
  }
  return rep;
}

}  // namespace sphds
