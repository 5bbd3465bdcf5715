#include "sphds/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sphds {

namespace {

double sq(double v) { return v * v; }

std::uint64_t hash_point(const Vector& y) {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (double v : y) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix64(h ^ bits);
  }
  return h;
}

}  // namespace

const char* to_string(FunctionClass c) {
  switch (c) {
    case FunctionClass::g_infinity: return "g_infinity";
    case FunctionClass::k_infinity: return "k_infinity";
    case FunctionClass::pd_wrt_set: return "pd_wrt_set";
    case FunctionClass::psd_wrt_set: return "psd_wrt_set";
    case FunctionClass::continuous: return "continuous";
  }
  return "?";
}

double ComparisonFunction::operator()(double s) const {
  if (!radial) throw std::invalid_argument("comparison function has no radial evaluator");
  return radial(s);
}

double ComparisonFunction::operator()(const Vector& p) const {
  if (!spatial) throw std::invalid_argument("comparison function has no spatial evaluator");
  return spatial(p);
}

SelectionBundle estimate_clarke_gradient(const std::function<double(const Vector&)>& f,
                                         const Vector& y, double radius, int n_samples,
                                         std::uint64_t seed, bool smooth, double fd_step) {
  if (radius <= 0.0) throw std::invalid_argument("gradient sampling radius must be positive");
  if (n_samples < 1) throw std::invalid_argument("gradient sampling needs at least one sample");

  auto fd_gradient = [&f, fd_step](const Vector& p) {
    Vector g(p.size());
    Vector hi = p, lo = p;
    for (std::size_t d = 0; d < p.size(); ++d) {
      hi[d] = p[d] + fd_step;
      lo[d] = p[d] - fd_step;
      double up = f(hi), down = f(lo);
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::invalid_argument("function not evaluable near y");
      g[d] = (up - down) / (2.0 * fd_step);
      hi[d] = p[d];
      lo[d] = p[d];
    }
    return g;
  };

  SelectionBundle out;
  if (smooth) {
    out.values.push_back(fd_gradient(y));
    return out;
  }
  out.convexified = true;
  auto stream = RandomStream::from_seed(seed);
  for (int k = 0; k < n_samples; ++k) {
    Vector p = y;
    // Uniform in the radius ball by box rejection.
    for (int attempt = 0; attempt < 64; ++attempt) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < y.size(); ++d) {
        double off = stream.next_uniform(-radius, radius);
        p[d] = y[d] + off;
        r2 += off * off;
      }
      if (r2 <= radius * radius) break;
    }
    out.values.push_back(fd_gradient(p));
  }
  return out;
}

SelectionBundle CertificateBundle::grad_V(const Vector& x) const {
  if (!V.defined()) throw std::invalid_argument("certificate missing V");
  if (V.mode == GradientMode::analytic) {
    if (!V.analytic_gradient) throw std::invalid_argument("V declared analytic but has no gradient");
    return V.analytic_gradient(x);
  }
  return estimate_clarke_gradient(V.value, x, sampling.radius, sampling.n_samples,
                                  mix64(sampling.seed ^ hash_point(x)), V.smooth,
                                  sampling.fd_step);
}

SelectionBundle CertificateBundle::grad_W(const Vector& y) const {
  if (!W.defined()) throw std::invalid_argument("certificate missing W");
  if (W.mode == GradientMode::analytic) {
    if (!W.analytic_gradient) throw std::invalid_argument("W declared analytic but has no gradient");
    return W.analytic_gradient(y);
  }
  return estimate_clarke_gradient(W.value, y, sampling.radius, sampling.n_samples,
                                  mix64(sampling.seed ^ hash_point(y)), W.smooth,
                                  sampling.fd_step);
}

SelectionBundle project_block(const SelectionBundle& grads, std::size_t begin, std::size_t len) {
  SelectionBundle out;
  out.convexified = grads.convexified;
  for (const auto& g : grads.values) {
    Vector part(g.begin() + begin, g.begin() + begin + len);
    if (std::find(out.values.begin(), out.values.end(), part) == out.values.end())
      out.values.push_back(std::move(part));
  }
  return out;
}

std::function<double(const Vector&)> compose_foster(const CertificateBundle& cert, double theta,
                                                    int n1) {
  if (theta < 0.0 || theta > 1.0) throw std::invalid_argument("theta must lie in [0, 1]");
  if (!cert.V.defined() || !cert.W.defined())
    throw std::invalid_argument("composite certificate needs both V and W");
  auto V = cert.V.value;
  auto W = cert.W.value;
  return [V, W, theta, n1](const Vector& y) {
    Vector x(y.begin(), y.begin() + n1);
    return (1.0 - theta) * V(x) + theta * W(y);
  };
}

Thresholds compute_thresholds(double k_x, double k_z, double k_1, double k_2, double k_3) {
  if (k_x <= 0.0 || k_z <= 0.0 || k_1 <= 0.0 || k_3 <= 0.0)
    throw std::invalid_argument("k_x, k_z, k_1, k_3 must be positive");
  if (k_2 < 0.0) throw std::invalid_argument("k_2 must be nonnegative");
  return {k_x * k_z / (k_2 * k_z + k_1 * k_3), k_3 / (k_1 + k_3)};
}

double quadratic_form_threshold(double k_x, double k_z, double k_1, double k_2, double k_3) {
  if (k_x <= 0.0 || k_z <= 0.0 || k_1 <= 0.0 || k_3 <= 0.0)
    throw std::invalid_argument("k_x, k_z, k_1, k_3 must be positive");
  return k_x * k_z / (k_x * k_2 + k_1 * k_3);
}

FlowMargin composite_flow_margin(double k_x, double k_z, double k_1, double k_2, double k_3,
                                 double theta, double epsilon) {
  if (theta <= 0.0 || theta >= 1.0) throw std::invalid_argument("theta must lie in (0, 1)");
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  const double a = (1.0 - theta) * k_x;
  const double d = theta * (k_z / epsilon - k_2);
  const double b = -0.5 * ((1.0 - theta) * k_3 + theta * k_1);
  const double mean = 0.5 * (a + d);
  const double lambda_min = mean - std::sqrt(sq(0.5 * (a - d)) + sq(b));
  return {lambda_min, lambda_min > 0.0};
}

const char* to_string(CheckId id) {
  switch (id) {
    case CheckId::A2a: return "A2a";
    case CheckId::A2b: return "A2b";
    case CheckId::A3: return "A3";
    case CheckId::A4a: return "A4a";
    case CheckId::A4b: return "A4b";
    case CheckId::A5: return "A5";
    case CheckId::A6a: return "A6a";
    case CheckId::A6b: return "A6b";
    case CheckId::A7: return "A7";
    case CheckId::A8: return "A8";
    case CheckId::T1b: return "T1b";
    case CheckId::T3b: return "T3b";
  }
  return "?";
}

nlohmann::json ViolationReport::to_json() const {
  nlohmann::json doc;
  doc["id"] = id;
  doc["grid"] = {{"lo", grid.lo}, {"hi", grid.hi}, {"counts", grid.counts}};
  doc["max_violation"] = max_violation;
  doc["witness"] = witness;
  doc["witness_index"] = witness_index;
  doc["n_points"] = n_points;
  doc["tolerance"] = tolerance;
  doc["mc_std"] = mc_std;
  doc["pass"] = pass;
  return doc;
}

namespace {

struct PointEval {
  double violation = -std::numeric_limits<double>::infinity();
  double mc_std = 0.0;
};

// Ordered reduction: the first point (lexicographic candidate order)
// achieving the maximum violation becomes the witness.
ViolationReport run_point_check(CheckId id, const GridSpec& grid, const std::vector<Vector>& pts,
                                double tol, int workers,
                                const std::function<PointEval(std::size_t, const Vector&)>& kernel) {
  if (pts.empty())
    throw std::invalid_argument(std::string("empty grid for check ") + to_string(id));
  std::vector<PointEval> results(pts.size());
  map_indexed(pts.size(), workers, [&](std::size_t i) { results[i] = kernel(i, pts[i]); });

  ViolationReport rep;
  rep.id = to_string(id);
  rep.grid = grid;
  rep.tolerance = tol;
  rep.n_points = pts.size();
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].violation > rep.max_violation) {
      rep.max_violation = results[i].violation;
      rep.witness = pts[i];
      rep.witness_index = i;
      rep.mc_std = results[i].mc_std;
    }
  }
  rep.pass = rep.max_violation <= tol + 3.0 * rep.mc_std;
  return rep;
}

std::vector<Vector> grid_points_where(const GridSpec& grid,
                                      const std::function<bool(const Vector&)>& keep) {
  std::vector<Vector> pts;
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vector p = grid.point(i);
    if (keep(p)) pts.push_back(std::move(p));
  }
  return pts;
}

double max_pairing(const SelectionBundle& grads, const SelectionBundle& flows) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& g : grads.values)
    for (const auto& f : flows.values) best = std::max(best, dot(g, f));
  return best;
}

std::vector<Vector> input_probes(const JumpInputDistribution& dist, std::uint64_t seed) {
  if (dist.is_finite_support()) return dist.atoms;
  auto stream = RandomStream::for_trial(seed, 0x9a5b);
  std::vector<Vector> out;
  for (int i = 0; i < 4; ++i) out.push_back(dist.sample(stream));
  return out;
}

double qss_dist_value(const SystemDefinition& sys, const Vector& y) {
  auto s = sys.split(y);
  return distance_to_quasi_steady_state(s.x, s.z, sys.qss(s.x)).value;
}

}  // namespace

ViolationReport check_flow_inequality(CheckId id, const SystemDefinition& sys,
                                      const CertificateBundle& cert, const CheckOptions& opts) {
  opts.grid.validate();
  const std::size_t n1 = static_cast<std::size_t>(sys.n1);
  const std::size_t n2 = static_cast<std::size_t>(sys.n2);

  switch (id) {
    case CheckId::A2b: {
      if (!cert.phi_z.defined()) throw std::invalid_argument("certificate missing phi_z for A2b");
      auto pts = grid_points_where(opts.grid,
                                   [&](const Vector& y) { return sys.flow_set.contains(y, 0.0); });
      return run_point_check(id, opts.grid, pts, opts.tol, opts.workers,
                             [&](std::size_t, const Vector& y) {
                               auto grads = project_block(cert.grad_W(y), n1, n2);
                               auto flows = sys.eval_flow_z(y);
                               double d = qss_dist_value(sys, y);
                               double lhs = max_pairing(grads, flows);
                               return PointEval{lhs + cert.k_z * sq(cert.phi_z(d)), 0.0};
                             });
    }
    case CheckId::A4b: {
      if (!cert.phi_x.defined()) throw std::invalid_argument("certificate missing phi_x for A4b");
      auto reduced = build_reduced_system(sys, opts.reduced);
      GridSpec xgrid = opts.grid.prefix(sys.n1);
      auto pts = grid_points_where(xgrid,
                                   [&](const Vector& x) { return sys.flow_set_x.contains(x, 0.0); });
      return run_point_check(id, xgrid, pts, opts.tol, opts.workers,
                             [&, reduced](std::size_t, const Vector& x) {
                               auto grads = cert.grad_V(x);
                               auto flows = reduced.flow(x);
                               double lhs = max_pairing(grads, flows);
                               double indicator =
                                   cert.recurrence_set.member ? (cert.recurrence_set.member(x) ? 1.0 : 0.0)
                                                              : 0.0;
                               return PointEval{lhs + cert.k_x * sq(cert.phi_x(x)) -
                                                    cert.mu_F * indicator,
                                                0.0};
                             });
    }
    case CheckId::A6a: {
      if (!cert.phi_x.defined() || !cert.phi_z.defined())
        throw std::invalid_argument("certificate missing phi_x or phi_z for A6a");
      auto pts = grid_points_where(opts.grid,
                                   [&](const Vector& y) { return sys.flow_set.contains(y, 0.0); });
      return run_point_check(id, opts.grid, pts, opts.tol, opts.workers,
                             [&](std::size_t, const Vector& y) {
                               auto s = sys.split(y);
                               auto grads = project_block(cert.grad_W(y), 0, n1);
                               auto flows = sys.flow_x(s.x, s.z);
                               double d = qss_dist_value(sys, y);
                               double lhs = max_pairing(grads, flows);
                               double rhs = cert.k_1 * cert.phi_z(d) * cert.phi_x(s.x) +
                                            cert.k_2 * sq(cert.phi_z(d));
                               return PointEval{lhs - rhs, 0.0};
                             });
    }
    case CheckId::A6b: {
      if (!cert.phi_x.defined() || !cert.phi_z.defined())
        throw std::invalid_argument("certificate missing phi_x or phi_z for A6b");
      auto reduced = build_reduced_system(sys, opts.reduced);
      auto pts = grid_points_where(opts.grid,
                                   [&](const Vector& y) { return sys.flow_set.contains(y, 0.0); });
      return run_point_check(
          id, opts.grid, pts, opts.tol, opts.workers, [&, reduced](std::size_t, const Vector& y) {
            auto s = sys.split(y);
            auto grads = cert.grad_V(s.x);
            auto flows = sys.flow_x(s.x, s.z);
            auto reduced_flows = reduced.flow(s.x);
            double d = qss_dist_value(sys, y);
            // For each slow flow value there must exist a reduced value
            // matching it up to the coupling bound: minimize over the
            // reduced bundle, maximize over the flow bundle.
            double lhs = -std::numeric_limits<double>::infinity();
            for (const auto& fx : flows.values) {
              double inner = std::numeric_limits<double>::infinity();
              for (const auto& fr : reduced_flows.values) {
                Vector diff(fx.size());
                for (std::size_t i = 0; i < fx.size(); ++i) diff[i] = fx[i] - fr[i];
                double worst = -std::numeric_limits<double>::infinity();
                for (const auto& g : grads.values) worst = std::max(worst, dot(g, diff));
                inner = std::min(inner, worst);
              }
              lhs = std::max(lhs, inner);
            }
            return PointEval{lhs - cert.k_3 * cert.phi_z(d) * cert.phi_x(s.x), 0.0};
          });
    }
    default:
      throw std::invalid_argument("not a flow inequality check");
  }
}

ViolationReport check_bound_inequality(CheckId id, const SystemDefinition& sys,
                                       const CertificateBundle& cert, const CheckOptions& opts) {
  opts.grid.validate();
  switch (id) {
    case CheckId::A2a: {
      if (!cert.alpha1.defined() || !cert.alpha2.defined())
        throw std::invalid_argument("certificate missing alpha1/alpha2 for A2a");
      auto pts = grid_points_where(opts.grid, [&](const Vector& y) {
        return sys.flow_set.contains(y, 0.0) || sys.jump_set.contains(y, 0.0);
      });
      // Push-forward probes of G over the input support extend the domain
      // to the reachable post-jump states.
      auto vs = input_probes(sys.jump_input, opts.seed);
      const std::size_t n_grid = pts.size();
      for (std::size_t i = 0; i < n_grid; ++i) {
        if (!sys.jump_set.contains(pts[i], 0.0)) continue;
        for (const auto& v : vs)
          for (const auto& g : sys.eval_jump(pts[i], v).values) pts.push_back(g);
      }
      return run_point_check(id, opts.grid, pts, opts.tol, opts.workers,
                             [&](std::size_t, const Vector& y) {
                               double d = qss_dist_value(sys, y);
                               double w = cert.W.value(y);
                               return PointEval{std::max(cert.alpha1(d) - w, w - cert.alpha2(d)),
                                                0.0};
                             });
    }
    case CheckId::A4a: {
      if (!cert.alpha3.defined() || !cert.alpha4.defined())
        throw std::invalid_argument("certificate missing alpha3/alpha4 for A4a");
      if (!cert.target_set.has_proximity())
        throw std::invalid_argument("target set needs a proximity function for A4a");
      auto reduced = build_reduced_system(sys, opts.reduced);
      GridSpec xgrid = opts.grid.prefix(sys.n1);
      auto pts = grid_points_where(xgrid, [&](const Vector& x) {
        return sys.flow_set_x.contains(x, 0.0) || sys.jump_set_x.contains(x, 0.0);
      });
      auto vs = input_probes(sys.jump_input, opts.seed);
      const std::size_t n_grid = pts.size();
      for (std::size_t i = 0; i < n_grid; ++i) {
        if (!sys.jump_set_x.contains(pts[i], 0.0)) continue;
        for (const auto& v : vs)
          for (const auto& g : reduced.jump(pts[i], v).values) pts.push_back(g);
      }
      return run_point_check(id, xgrid, pts, opts.tol, opts.workers,
                             [&](std::size_t, const Vector& x) {
                               double dist = cert.target_set.distance(x);
                               double val = cert.V.value(x);
                               return PointEval{
                                   std::max(cert.alpha3(dist) - val, val - cert.alpha4(dist)), 0.0};
                             });
    }
    default:
      throw std::invalid_argument("not a bound inequality check");
  }
}

ExpectationResult expect_sup_over_jump(const std::function<SelectionBundle(const Vector& v)>& jump_at,
                                       const std::function<double(const Vector&)>& fn,
                                       const JumpInputDistribution& dist, int n_mc,
                                       RandomStream stream) {
  dist.validate();
  auto sup_at = [&](const Vector& v) {
    auto bundle = jump_at(v);
    if (bundle.empty()) throw std::invalid_argument("jump map empty on jump set");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& g : bundle.values) best = std::max(best, fn(g));
    return best;
  };
  if (dist.is_finite_support()) {
    double mean = 0.0;
    for (std::size_t i = 0; i < dist.atoms.size(); ++i) mean += dist.probs[i] * sup_at(dist.atoms[i]);
    return {mean, 0.0};
  }
  if (n_mc < 100) throw std::invalid_argument("sampled expectations need n_mc >= 100");
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < n_mc; ++k) {
    double s = sup_at(dist.sample(stream));
    sum += s;
    sum_sq += s * s;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

ViolationReport check_jump_expectation(CheckId id, const SystemDefinition& sys,
                                       const CertificateBundle& cert, const CheckOptions& opts) {
  opts.grid.validate();
  const bool slow_only = (id == CheckId::A5);
  GridSpec grid = slow_only ? opts.grid.prefix(sys.n1) : opts.grid;
  auto pts = grid_points_where(grid, [&](const Vector& p) {
    return slow_only ? sys.jump_set_x.contains(p, 0.0) : sys.jump_set.contains(p, 0.0);
  });

  ReducedSystem reduced;
  const bool needs_reduced = (id == CheckId::A5 || id == CheckId::A8);
  if (needs_reduced) reduced = build_reduced_system(sys, opts.reduced);

  std::function<double(const Vector&)> composite;
  if (id == CheckId::T1b || id == CheckId::T3b) {
    auto th = compute_thresholds(cert.k_x, cert.k_z, cert.k_1, cert.k_2, cert.k_3);
    composite = compose_foster(cert, th.theta_star, sys.n1);
  }

  auto kernel = [&](std::size_t i, const Vector& p) {
    auto stream = RandomStream::for_trial(opts.seed, i);
    double expectation = 0.0, std_err = 0.0, rhs = 0.0;
    switch (id) {
      case CheckId::A3: {
        if (!cert.rho_z.defined()) throw std::invalid_argument("certificate missing rho_z for A3");
        auto r = expect_sup_over_jump([&](const Vector& v) { return sys.eval_jump(p, v); },
                                      cert.W.value, sys.jump_input, opts.n_mc, stream);
        expectation = r.mean;
        std_err = r.std_error;
        rhs = cert.W.value(p) - cert.c_z * cert.rho_z(qss_dist_value(sys, p));
        break;
      }
      case CheckId::A7: {
        if (!cert.rho_4.defined()) throw std::invalid_argument("certificate missing rho_4 for A7");
        auto s = sys.split(p);
        auto r = expect_sup_over_jump([&](const Vector& v) { return sys.eval_jump(p, v); },
                                      cert.W.value, sys.jump_input, opts.n_mc, stream);
        expectation = r.mean;
        std_err = r.std_error;
        rhs = cert.W.value(p) + cert.k_4 * cert.rho_4(s.x);
        break;
      }
      case CheckId::A5: {
        if (!cert.rho_x.defined()) throw std::invalid_argument("certificate missing rho_x for A5");
        auto r = expect_sup_over_jump([&](const Vector& v) { return reduced.jump(p, v); },
                                      cert.V.value, sys.jump_input, opts.n_mc, stream);
        expectation = r.mean;
        std_err = r.std_error;
        double indicator =
            cert.recurrence_set.member ? (cert.recurrence_set.member(p) ? 1.0 : 0.0) : 0.0;
        rhs = cert.V.value(p) - cert.c_x * cert.rho_x(p) + cert.mu_J * indicator;
        break;
      }
      case CheckId::A8: {
        if (!cert.rho_5.defined()) throw std::invalid_argument("certificate missing rho_5 for A8");
        auto s = sys.split(p);
        auto r = expect_sup_over_jump([&](const Vector& v) { return reduced.jump(s.x, v); },
                                      cert.V.value, sys.jump_input, opts.n_mc, stream);
        expectation = r.mean;
        std_err = r.std_error;
        rhs = cert.V.value(s.x) + cert.k_5 * cert.rho_5(qss_dist_value(sys, p));
        break;
      }
      case CheckId::T1b: {
        if (!cert.rho_hat.defined())
          throw std::invalid_argument("certificate missing rho_hat for T1b");
        auto r = expect_sup_over_jump([&](const Vector& v) { return sys.eval_jump(p, v); },
                                      composite, sys.jump_input, opts.n_mc, stream);
        expectation = r.mean;
        std_err = r.std_error;
        rhs = composite(p) - cert.rho_hat(p);
        break;
      }
      case CheckId::T3b: {
        if (!cert.rho_hat.defined())
          throw std::invalid_argument("certificate missing rho_hat for T3b");
        auto s = sys.split(p);
        auto r = expect_sup_over_jump([&](const Vector& v) { return sys.eval_jump(p, v); },
                                      composite, sys.jump_input, opts.n_mc, stream);
        expectation = r.mean;
        std_err = r.std_error;
        // The lifted recurrence set is probed through its fast-block
        // inflation: x in O and |z - m(x)| < delta.
        double indicator = 0.0;
        if (cert.recurrence_set.member && cert.recurrence_set.member(s.x)) {
          Vector m = sys.qss_point(s.x);
          Vector diff(s.z.size());
          for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = s.z[k] - m[k];
          if (norm(diff) < cert.tilde_O_delta) indicator = 1.0;
        }
        rhs = composite(p) - cert.rho_hat(p) + cert.mu_J * indicator;
        break;
      }
      default:
        throw std::invalid_argument("not a jump expectation check");
    }
    return PointEval{expectation - rhs, std_err};
  };
  return run_point_check(id, grid, pts, opts.tol, opts.workers, kernel);
}

const char* to_string(TheoremId id) {
  switch (id) {
    case TheoremId::T1: return "T1";
    case TheoremId::T2: return "T2";
    case TheoremId::T3: return "T3";
    case TheoremId::T4: return "T4";
  }
  return "?";
}

std::optional<TheoremId> theorem_from_string(const std::string& s) {
  if (s == "T1" || s == "t1") return TheoremId::T1;
  if (s == "T2" || s == "t2") return TheoremId::T2;
  if (s == "T3" || s == "t3") return TheoremId::T3;
  if (s == "T4" || s == "t4") return TheoremId::T4;
  return std::nullopt;
}

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::not_checked: return "not_checked";
  }
  return "?";
}

const ChecklistEntry* TheoremChecklist::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

nlohmann::json TheoremChecklist::to_json() const {
  nlohmann::json doc;
  doc["theorem"] = to_string(theorem);
  doc["overall"] = overall ? "pass" : "fail";
  doc["epsilon"] = epsilon;
  doc["epsilon_star"] = thresholds.epsilon_star;
  doc["theta_star"] = thresholds.theta_star;
  nlohmann::json ents = nlohmann::json::array();
  for (const auto& e : entries) {
    ents.push_back({{"name", e.name},
                    {"status", to_string(e.status)},
                    {"required", e.required},
                    {"detail", e.detail}});
  }
  doc["entries"] = ents;
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : reports) reps.push_back(r.to_json());
  doc["reports"] = reps;
  return doc;
}

namespace {

struct ClassProbes {
  std::vector<double> radii;       // nonnegative scalar samples
  std::vector<Vector> x_points;    // slow-block probes
  std::vector<Vector> y_points;    // full-state probes
  double scale = 1.0;
};

ClassProbes make_probes(const SystemDefinition& sys, const GridSpec& grid, int count,
                        std::uint64_t seed) {
  ClassProbes pr;
  Vector diag(grid.lo.size());
  for (std::size_t d = 0; d < diag.size(); ++d) diag[d] = grid.hi[d] - grid.lo[d];
  pr.scale = norm(diag);
  auto stream = RandomStream::for_trial(seed, 0xc1a55);
  for (int i = 0; i < count; ++i) {
    pr.radii.push_back(pr.scale * static_cast<double>(i) / std::max(1, count - 1));
    Vector y(grid.lo.size());
    for (std::size_t d = 0; d < y.size(); ++d)
      y[d] = stream.next_uniform(grid.lo[d], grid.hi[d]);
    pr.x_points.emplace_back(y.begin(), y.begin() + sys.n1);
    pr.y_points.push_back(std::move(y));
  }
  return pr;
}

std::optional<std::string> radial_class_issue(const ComparisonFunction& f,
                                              const std::vector<double>& radii,
                                              FunctionClass required_at_most) {
  if (!f.radial) return "no radial evaluator";
  const bool need_zero = required_at_most == FunctionClass::k_infinity;
  const bool need_strict = required_at_most == FunctionClass::k_infinity;
  double prev = f(0.0);
  if (need_zero && std::fabs(prev) > 1e-12) return "not zero at zero";
  if (prev < -1e-12) return "negative value";
  for (std::size_t i = 1; i < radii.size(); ++i) {
    double cur = f(radii[i]);
    if (cur < -1e-12) return "negative value";
    if (need_strict ? (cur <= prev) : (cur < prev - 1e-12))
      return need_strict ? "not strictly increasing" : "decreasing";
    prev = cur;
  }
  return std::nullopt;
}

bool class_at_least_kinf(FunctionClass c) { return c == FunctionClass::k_infinity; }
bool class_at_least_ginf(FunctionClass c) {
  return c == FunctionClass::k_infinity || c == FunctionClass::g_infinity;
}

}  // namespace

TheoremChecklist evaluate_theorem(const SystemDefinition& sys, const CertificateBundle& cert,
                                  double epsilon, TheoremId theorem, const TheoremOptions& opts) {
  TheoremChecklist out;
  out.theorem = theorem;
  out.epsilon = epsilon;

  auto add = [&out](const std::string& name, CheckStatus status, bool required,
                    const std::string& detail = "") {
    out.entries.push_back({name, status, required, detail});
  };
  auto add_bool = [&add](const std::string& name, bool ok, bool required,
                         const std::string& detail = "") {
    add(name, ok ? CheckStatus::pass : CheckStatus::fail, required, detail);
  };

  // Shared screens -----------------------------------------------------
  {
    BasicConditionsProbe probe;
    probe.box_lo = opts.checks.grid.lo;
    probe.box_hi = opts.checks.grid.hi;
    probe.n_probes = 256;
    probe.seed = opts.checks.seed;
    probe.epsilon = epsilon;
    auto rep = validate_basic_conditions(sys, probe);
    std::string detail = rep.pass ? "sampled screen passed" : rep.failures.front();
    add_bool("standing_spot_check", rep.pass, true, detail);
  }

  bool have_thresholds = false;
  try {
    out.thresholds = compute_thresholds(cert.k_x, cert.k_z, cert.k_1, cert.k_2, cert.k_3);
    have_thresholds = true;
  } catch (const std::exception& e) {
    add("epsilon_below_threshold", CheckStatus::not_checked, true, e.what());
  }
  if (have_thresholds) {
    std::ostringstream detail;
    detail.precision(12);
    double qf = quadratic_form_threshold(cert.k_x, cert.k_z, cert.k_1, cert.k_2, cert.k_3);
    auto margin = composite_flow_margin(cert.k_x, cert.k_z, cert.k_1, cert.k_2, cert.k_3,
                                        out.thresholds.theta_star, epsilon);
    detail << "epsilon=" << epsilon << ", epsilon_star=" << out.thresholds.epsilon_star
           << ", quadratic_form_threshold=" << qf << ", lambda_min(theta_star)=" << margin.lambda_min;
    bool eps_ok = epsilon > 0.0 && epsilon < out.thresholds.epsilon_star;
    if ((epsilon < qf) != eps_ok) detail << "; the two threshold formulas disagree at this epsilon";
    add_bool("epsilon_below_threshold", eps_ok, true, detail.str());
  }

  auto probes = make_probes(sys, opts.checks.grid, opts.class_probe_count, opts.checks.seed);

  // Comparison-function classes ----------------------------------------
  const bool need_kinf = (theorem == TheoremId::T1 || theorem == TheoremId::T2);
  {
    std::ostringstream detail;
    bool ok = true;
    const ComparisonFunction* alphas[4] = {&cert.alpha1, &cert.alpha2, &cert.alpha3, &cert.alpha4};
    const char* names[4] = {"alpha1", "alpha2", "alpha3", "alpha4"};
    for (int i = 0; i < 4; ++i) {
      if (!alphas[i]->defined()) {
        ok = false;
        detail << names[i] << " missing; ";
        continue;
      }
      bool class_ok = need_kinf ? class_at_least_kinf(alphas[i]->declared_class)
                                : class_at_least_ginf(alphas[i]->declared_class);
      if (!class_ok) {
        ok = false;
        detail << names[i] << " declared " << to_string(alphas[i]->declared_class) << "; ";
        continue;
      }
      auto issue = radial_class_issue(*alphas[i], probes.radii,
                                      need_kinf ? FunctionClass::k_infinity
                                                : FunctionClass::g_infinity);
      if (issue) {
        ok = false;
        detail << names[i] << " " << *issue << "; ";
      }
    }
    add_bool("alpha_classes", ok, true,
             ok ? (need_kinf ? "all declared and sampled k-infinity" : "all g-infinity or stronger")
                : detail.str());
  }

  if (theorem == TheoremId::T1 || theorem == TheoremId::T2) {
    const bool strict = theorem == TheoremId::T1;
    std::ostringstream detail;
    bool ok = cert.phi_x.defined() && cert.phi_z.defined();
    if (!ok) detail << "phi_x or phi_z missing";
    if (ok) {
      bool cls_x = strict ? cert.phi_x.declared_class == FunctionClass::pd_wrt_set
                          : (cert.phi_x.declared_class == FunctionClass::pd_wrt_set ||
                             cert.phi_x.declared_class == FunctionClass::psd_wrt_set);
      bool cls_z = strict ? cert.phi_z.declared_class == FunctionClass::pd_wrt_set
                          : (cert.phi_z.declared_class == FunctionClass::pd_wrt_set ||
                             cert.phi_z.declared_class == FunctionClass::psd_wrt_set);
      if (!cls_x || !cls_z) {
        ok = false;
        detail << "declared classes phi_x=" << to_string(cert.phi_x.declared_class)
               << ", phi_z=" << to_string(cert.phi_z.declared_class);
      }
    }
    if (ok && cert.target_set.has_proximity()) {
      for (const auto& x : probes.x_points) {
        double v = cert.phi_x(x);
        if (v < -1e-12) {
          ok = false;
          detail << "phi_x negative";
          break;
        }
        if (strict && cert.target_set.distance(x) > 0.02 * probes.scale && v <= 0.0) {
          ok = false;
          detail << "phi_x vanishes off the target set";
          break;
        }
      }
    }
    if (ok) {
      for (double r : probes.radii) {
        double v = cert.phi_z(r);
        if (v < -1e-12 || (strict && r > 0.02 * probes.scale && v <= 0.0)) {
          ok = false;
          detail << "phi_z not positive definite on samples";
          break;
        }
      }
    }
    add_bool("phi_classes", ok, true, ok ? (strict ? "pd classes verified on samples" : "psd accepted") : detail.str());
  }

  // Measure-zero interpretation: the vanishing-perturbation conditions are
  // read as mu_F = 0 (and mu_J = 0 where the reduced jump condition is
  // invoked), since mu elsewhere names the input distribution.
  if (theorem == TheoremId::T1 || theorem == TheoremId::T2)
    add_bool("mu_F_zero_(vanishing_flow_relaxation)", cert.mu_F == 0.0, true,
             "mu_F = " + std::to_string(cert.mu_F));
  if (theorem == TheoremId::T3) {
    add_bool("mu_F_positive", cert.mu_F > 0.0, true, "mu_F = " + std::to_string(cert.mu_F));
    add_bool("mu_J_positive", cert.mu_J > 0.0, true, "mu_J = " + std::to_string(cert.mu_J));
  }

  if (theorem == TheoremId::T3 || theorem == TheoremId::T4) {
    bool single = true;
    bool in_cz = true;
    for (const auto& x : probes.x_points) {
      if (!sys.flow_set_x.contains(x, 0.0)) continue;
      auto m = sys.qss(x);
      if (m.size() != 1) single = false;
      for (const auto& w : m.values)
        if (!sys.flow_set_z.contains(w, 1e-9)) in_cz = false;
    }
    add_bool("qss_single_valued_map", single && in_cz, true,
             single ? (in_cz ? "single-valued, maps into C_z on samples" : "image leaves C_z")
                    : "set-valued at sampled points");

    bool closure_ok = cert.A_is_closure_of_O;
    std::string detail = closure_ok ? "declared" : "not declared";
    if (closure_ok && cert.recurrence_set.member && cert.target_set.member) {
      for (const auto& x : probes.x_points) {
        if (cert.recurrence_set.member(x) && !cert.target_set.member(x)) {
          closure_ok = false;
          detail = "sampled point of O outside A";
          break;
        }
      }
    }
    add_bool("A_closure_of_O", closure_ok, true, detail);
  }

  // Grid screens ---------------------------------------------------------
  auto run_report = [&](CheckId id, auto&& fn, bool required) -> std::optional<bool> {
    try {
      ViolationReport rep = fn(id, sys, cert, opts.checks);
      std::ostringstream detail;
      detail.precision(12);
      detail << "max_violation=" << rep.max_violation << " at n_points=" << rep.n_points;
      add_bool(rep.id, rep.pass, required, detail.str());
      bool pass = rep.pass;
      out.reports.push_back(std::move(rep));
      return pass;
    } catch (const std::exception& e) {
      add(to_string(id), CheckStatus::not_checked, required, e.what());
      return std::nullopt;
    }
  };

  run_report(CheckId::A2a, check_bound_inequality, true);
  run_report(CheckId::A2b, check_flow_inequality, true);
  run_report(CheckId::A4a, check_bound_inequality, true);
  run_report(CheckId::A4b, check_flow_inequality, true);
  run_report(CheckId::A6a, check_flow_inequality, true);
  run_report(CheckId::A6b, check_flow_inequality, true);

  if (theorem == TheoremId::T1) {
    run_report(CheckId::T1b, check_jump_expectation, true);
    bool ok = cert.rho_hat.defined();
    std::string detail = ok ? "" : "rho_hat missing";
    if (ok) {
      for (const auto& y : probes.y_points) {
        auto s = sys.split(y);
        double d_target = cert.target_set.has_proximity() ? cert.target_set.distance(s.x) : 0.0;
        double d_layer = distance_to_quasi_steady_state(s.x, s.z, sys.qss(s.x)).value;
        double off = std::sqrt(d_target * d_target + d_layer * d_layer);
        double v = cert.rho_hat(y);
        if (v < -1e-12 || (off > 0.02 * probes.scale && v <= 0.0)) {
          ok = false;
          detail = "rho_hat not positive off the lifted target set";
          break;
        }
      }
      if (ok) detail = "positive off the lifted target set on samples";
    }
    add_bool("rho_hat_pd_sampled", ok, true, detail);
  }

  if (theorem == TheoremId::T3) {
    run_report(CheckId::T3b, check_jump_expectation, true);
    bool ok = cert.rho_hat.defined();
    if (ok) {
      for (const auto& y : probes.y_points)
        if (cert.rho_hat(y) <= 0.0) {
          ok = false;
          break;
        }
    }
    add_bool("rho_hat_positive_sampled", ok, true,
             ok ? "positive at all sampled states" : "not positive everywhere");
  }

  if (theorem == TheoremId::T2 || theorem == TheoremId::T4) {
    const bool require_mu_zero = theorem == TheoremId::T2;

    auto fn_equal = [&probes](const ComparisonFunction& a, const ComparisonFunction& b,
                              bool spatial) {
      if (!a.defined() || !b.defined()) return false;
      if (spatial) {
        for (const auto& x : probes.x_points)
          if (std::fabs(a(x) - b(x)) > 1e-12) return false;
      } else {
        for (double r : probes.radii)
          if (std::fabs(a(r) - b(r)) > 1e-12) return false;
      }
      return true;
    };

    // Route 1: reduced jumps strictly decrease V while W grows at most
    // k_4 rho_4, with k_3 k_4 / k_1 < c_x.
    bool r1 = true;
    {
      auto rep5 = run_report(CheckId::A5, check_jump_expectation, false);
      auto rep7 = run_report(CheckId::A7, check_jump_expectation, false);
      r1 = rep5.value_or(false) && rep7.value_or(false);
      if (require_mu_zero) {
        add_bool("route1_mu_J_zero", cert.mu_J == 0.0, false, "mu_J = " + std::to_string(cert.mu_J));
        r1 = r1 && cert.mu_J == 0.0;
      }
      bool same = fn_equal(cert.rho_x, cert.rho_4, true);
      add_bool("route1_rho_x_equals_rho_4", same, false, same ? "sampled equal" : "differ on samples");
      bool ineq = cert.k_1 > 0.0 && cert.k_3 * cert.k_4 / cert.k_1 < cert.c_x;
      add_bool("route1_k3k4_over_k1_lt_cx", ineq, false,
               "k_3 k_4 / k_1 = " + std::to_string(cert.k_3 * cert.k_4 / cert.k_1) +
                   " vs c_x = " + std::to_string(cert.c_x));
      r1 = r1 && same && ineq;
    }

    // Route 2: jumps strictly decrease W while V grows at most k_5 rho_5,
    // with k_1 k_5 / k_3 < c_z.
    bool r2 = true;
    {
      auto rep3 = run_report(CheckId::A3, check_jump_expectation, false);
      auto rep8 = run_report(CheckId::A8, check_jump_expectation, false);
      r2 = rep3.value_or(false) && rep8.value_or(false);
      bool same = fn_equal(cert.rho_z, cert.rho_5, false);
      add_bool("route2_rho_z_equals_rho_5", same, false, same ? "sampled equal" : "differ on samples");
      bool ineq = cert.k_3 > 0.0 && cert.k_1 * cert.k_5 / cert.k_3 < cert.c_z;
      add_bool("route2_k1k5_over_k3_lt_cz", ineq, false,
               "k_1 k_5 / k_3 = " + std::to_string(cert.k_1 * cert.k_5 / cert.k_3) +
                   " vs c_z = " + std::to_string(cert.c_z));
      r2 = r2 && same && ineq;
    }

    add_bool("jump_relaxation_route", r1 || r2, true,
             r1 ? "route 1 (reduced jump decrease)" : (r2 ? "route 2 (fast jump decrease)" : "neither route holds"));

    if (opts.level_set_nonstationary.has_value()) {
      add_bool(theorem == TheoremId::T2 ? "level_set_nonstationarity"
                                        : "level_set_nonstationarity_off_target",
               *opts.level_set_nonstationary, true,
               "sampling heuristic, not conclusive");
    } else {
      add(theorem == TheoremId::T2 ? "level_set_nonstationarity"
                                   : "level_set_nonstationarity_off_target",
          CheckStatus::not_checked, true, "no heuristic result supplied");
    }
  }

  out.overall = true;
  for (const auto& e : out.entries)
    if (e.required && e.status != CheckStatus::pass) out.overall = false;
  return out;
}

}  // namespace sphds
