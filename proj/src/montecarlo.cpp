#include "sphds/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sphds/grid.hpp"

namespace sphds {

namespace {

std::uint64_t hashable_level(double c) {
  std::uint64_t bits;
  std::memcpy(&bits, &c, sizeof(bits));
  return mix64(bits);
}

// log of C(n, k) via lgamma; stable for the trial counts used here.
double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// P(X >= s) for X ~ Binomial(n, p).
double binomial_upper_tail(int s, int n, double p) {
  if (s <= 0) return 1.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double tail = 0.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  for (int k = s; k <= n; ++k)
    tail += std::exp(log_choose(n, k) + k * lp + (n - k) * lq);
  return std::min(tail, 1.0);
}

}  // namespace

double binomial_lower_bound(int n_success, int n_trials, double confidence) {
  if (n_trials < 1 || n_success < 0 || n_success > n_trials)
    throw std::invalid_argument("binomial bound needs 0 <= n_success <= n_trials, n_trials >= 1");
  if (confidence <= 0.0 || confidence >= 1.0)
    throw std::invalid_argument("confidence must lie in (0, 1)");
  if (n_success == 0) return 0.0;
  const double alpha = 1.0 - confidence;
  // p_lo solves P(Bin(n, p) >= s) = alpha; the tail is increasing in p.
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (binomial_upper_tail(n_success, n_trials, mid) < alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

nlohmann::json EnsembleEstimate::to_json() const {
  nlohmann::json doc;
  doc["n_trials"] = n_trials;
  doc["n_success"] = n_success;
  doc["point_estimate"] = point_estimate;
  doc["lower_bound"] = lower_bound;
  doc["confidence"] = confidence;
  doc["criterion"] = criterion;
  doc["seed"] = seed;
  return doc;
}

std::string trials_to_csv(const std::vector<TrialOutcome>& trials) {
  std::ostringstream os;
  os.precision(17);
  os << "trial,success,hitting_time,stop_reason\n";
  for (const auto& t : trials)
    os << t.trial << "," << (t.success ? 1 : 0) << "," << t.hitting_time << "," << t.stop_reason
       << "\n";
  return os.str();
}

double lifted_target_distance(const SystemDefinition& sys, const SetPredicate& target_x,
                              const Vector& y) {
  auto s = sys.split(y);
  double d_slow = target_x.distance(s.x);
  double d_fast = distance_to_quasi_steady_state(s.x, s.z, sys.qss(s.x)).value;
  return std::sqrt(d_slow * d_slow + d_fast * d_fast);
}

namespace {

// Bounding box of the delta-inflated lifted target: the slow box comes from
// the target set, the fast box from probing M over it.
std::pair<Vector, Vector> lifted_sampling_box(const SystemDefinition& sys,
                                              const SetPredicate& target_x, double delta) {
  if (!target_x.bounds)
    throw std::invalid_argument("target set needs a bounding box to sample initial conditions");
  Vector xlo = target_x.bounds->first, xhi = target_x.bounds->second;
  Vector zlo(static_cast<std::size_t>(sys.n2), std::numeric_limits<double>::infinity());
  Vector zhi(static_cast<std::size_t>(sys.n2), -std::numeric_limits<double>::infinity());
  const int probes_per_dim = 9;
  GridSpec xgrid = GridSpec::uniform(xlo, xhi, probes_per_dim);
  const std::size_t n = xgrid.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto m = sys.qss(xgrid.point(i));
    for (const auto& w : m.values)
      for (std::size_t d = 0; d < w.size(); ++d) {
        zlo[d] = std::min(zlo[d], w[d]);
        zhi[d] = std::max(zhi[d], w[d]);
      }
  }
  for (auto& v : xlo) v -= delta;
  for (auto& v : xhi) v += delta;
  for (auto& v : zlo) v -= delta;
  for (auto& v : zhi) v += delta;
  return {concat(xlo, zlo), concat(xhi, zhi)};
}

Vector rejection_sample(const std::pair<Vector, Vector>& box,
                        const std::function<bool(const Vector&)>& accept, RandomStream& stream,
                        int max_attempts) {
  Vector y(box.first.size());
  for (int a = 0; a < max_attempts; ++a) {
    for (std::size_t d = 0; d < y.size(); ++d)
      y[d] = stream.next_uniform(box.first[d], box.second[d]);
    if (accept(y)) return y;
  }
  throw std::runtime_error("no valid initial conditions found after bounded rejection sampling");
}

EnsembleEstimate aggregate(const std::vector<char>& successes, double confidence,
                           const std::string& criterion, std::uint64_t seed) {
  EnsembleEstimate est;
  est.n_trials = static_cast<int>(successes.size());
  est.n_success = static_cast<int>(std::count(successes.begin(), successes.end(), 1));
  est.point_estimate = est.n_trials ? static_cast<double>(est.n_success) / est.n_trials : 0.0;
  est.lower_bound = est.n_trials ? binomial_lower_bound(est.n_success, est.n_trials, confidence) : 0.0;
  est.confidence = confidence;
  est.criterion = criterion;
  est.seed = seed;
  return est;
}

}  // namespace

bool stability_trial(const SystemDefinition& sys, const CertificateBundle& cert, double epsilon,
                     const Vector& y0, const StabilityProbeConfig& cfg, std::uint64_t solve_seed) {
  ExecConfig exec = cfg.exec;
  exec.T_total = std::max(exec.T_total, cfg.T * 1.5 + 1.0);
  auto rec = solve(sys, y0, epsilon, exec, solve_seed);
  if (rec.stop_reason == StopReason::blow_up) return false;
  const double inner = cfg.eps_ball * cfg.attract_fraction;
  for (const auto& [t, j, y] : rec.arc.all_nodes()) {
    double d = lifted_target_distance(sys, cert.target_set, y);
    if (d >= cfg.eps_ball) return false;
    if (t + static_cast<double>(j) >= cfg.T && d >= inner) return false;
  }
  return true;
}

EnsembleEstimate estimate_stability_in_probability(const SystemDefinition& sys,
                                                   const CertificateBundle& cert, double epsilon,
                                                   const StabilityProbeConfig& cfg,
                                                   std::uint64_t seed,
                                                   std::vector<TrialOutcome>* trials) {
  if (cfg.trials < 1) throw std::invalid_argument("trial count must be at least 1");
  if (cfg.delta <= 0.0 || cfg.eps_ball <= 0.0 || cfg.T <= 0.0)
    throw std::invalid_argument("delta, eps_ball and T must be positive");
  auto box = lifted_sampling_box(sys, cert.target_set, cfg.delta);
  auto accept = [&](const Vector& y) {
    if (lifted_target_distance(sys, cert.target_set, y) > cfg.delta) return false;
    return sys.flow_set.contains(y, 0.0) || sys.jump_set.contains(y, 0.0);
  };

  std::vector<char> successes(static_cast<std::size_t>(cfg.trials), 0);
  std::vector<TrialOutcome> rows(static_cast<std::size_t>(cfg.trials));
  map_indexed(successes.size(), cfg.workers, [&](std::size_t i) {
    auto stream = RandomStream::for_trial(seed, i);
    Vector y0 = rejection_sample(box, accept, stream, 100 * 100);
    std::uint64_t solve_seed = mix64(seed ^ (i * 0x9e3779b97f4a7c15ULL + 0x51ab));
    bool ok = stability_trial(sys, cert, epsilon, y0, cfg, solve_seed);
    successes[i] = ok ? 1 : 0;
    rows[i] = {static_cast<int>(i), ok, -1.0, ""};
  });
  if (trials) *trials = std::move(rows);

  std::ostringstream crit;
  crit << "stay in lifted target + " << cfg.eps_ball << " ball, inside "
       << cfg.eps_ball * cfg.attract_fraction << " after t+j >= " << cfg.T;
  return aggregate(successes, cfg.confidence, crit.str(), seed);
}

RecurrenceOutcome recurrence_trial(const SystemDefinition& sys, const RecurrenceConfig& cfg,
                                   double epsilon, const Vector& y0, std::uint64_t solve_seed) {
  ExecConfig exec = cfg.exec;
  // Success is decided by t + j = tau: solving further is wasted work.
  exec.T_total = cfg.tau + 0.5;
  auto rec = solve(sys, y0, epsilon, exec, solve_seed);

  RecurrenceOutcome out;
  out.stop_reason = rec.stop_reason;
  if (rec.stop_reason == StopReason::blow_up) {
    out.finite_escape_candidate = true;
    return out;
  }
  for (const auto& [t, j, y] : rec.arc.all_nodes()) {
    double total = t + static_cast<double>(j);
    if (total > cfg.tau) break;
    auto s = sys.split(y);
    if (!cfg.O_slow.member(s.x)) continue;
    Vector m = sys.qss_point(s.x);
    Vector diff(s.z.size());
    for (std::size_t d = 0; d < diff.size(); ++d) diff[d] = s.z[d] - m[d];
    if (norm(diff) < cfg.delta_O) {
      out.success = true;
      out.hitting_time = total;
      return out;
    }
  }
  if (rec.stop_reason == StopReason::stopped_outside_C_union_D &&
      rec.arc.end_total_time() < cfg.tau) {
    out.success = true;  // the solution stopped before the horizon
  }
  return out;
}

RecurrenceEstimate estimate_recurrence(const SystemDefinition& sys, const RecurrenceConfig& cfg,
                                       double epsilon, std::uint64_t seed,
                                       std::vector<TrialOutcome>* trials) {
  if (cfg.trials < 1) throw std::invalid_argument("trial count must be at least 1");
  if (cfg.delta_O <= 0.0) throw std::invalid_argument("delta_O must be positive");
  if (cfg.tau < 0.0) throw std::invalid_argument("tau must be nonnegative");

  const std::size_t dim = static_cast<std::size_t>(sys.n1 + sys.n2);
  std::pair<Vector, Vector> box{Vector(dim, -cfg.R), Vector(dim, cfg.R)};
  auto accept = [&](const Vector& y) {
    if (norm(y) > cfg.R) return false;
    return sys.flow_set.contains(y, 0.0) || sys.jump_set.contains(y, 0.0);
  };

  std::vector<char> successes(static_cast<std::size_t>(cfg.trials), 0);
  std::vector<char> escapes(static_cast<std::size_t>(cfg.trials), 0);
  std::vector<TrialOutcome> rows(static_cast<std::size_t>(cfg.trials));
  map_indexed(successes.size(), cfg.workers, [&](std::size_t i) {
    auto stream = RandomStream::for_trial(seed, i);
    Vector y0 = rejection_sample(box, accept, stream, 100 * 100);
    std::uint64_t solve_seed = mix64(seed ^ (i * 0x9e3779b97f4a7c15ULL + 0x8ec4));
    auto r = recurrence_trial(sys, cfg, epsilon, y0, solve_seed);
    successes[i] = r.success ? 1 : 0;
    escapes[i] = r.finite_escape_candidate ? 1 : 0;
    rows[i] = {static_cast<int>(i), r.success, r.hitting_time, to_string(r.stop_reason)};
  });
  if (trials) *trials = std::move(rows);

  RecurrenceEstimate out;
  std::ostringstream crit;
  crit << "hit {x in O, |z - m(x)| < " << cfg.delta_O << "} by t+j <= " << cfg.tau
       << " or stop earlier";
  out.estimate = aggregate(successes, cfg.confidence, crit.str(), seed);
  out.finite_escape_candidates = static_cast<int>(std::count(escapes.begin(), escapes.end(), 1));
  out.delta_O = cfg.delta_O;
  return out;
}

std::vector<SweepRow> sweep_epsilon(const SystemDefinition& sys, const CertificateBundle& cert,
                                    const std::vector<double>& epsilons, TheoremId theorem,
                                    const TheoremOptions& theorem_opts,
                                    const StabilityProbeConfig& stability_cfg,
                                    const RecurrenceConfig& recurrence_cfg, std::uint64_t seed) {
  if (epsilons.empty()) throw std::invalid_argument("epsilon grid must be nonempty");
  std::vector<double> sorted = epsilons;
  std::sort(sorted.begin(), sorted.end());
  std::vector<SweepRow> rows;
  for (double eps : sorted) {
    if (eps <= 0.0) throw std::invalid_argument("epsilon grid entries must be positive");
    SweepRow row;
    row.epsilon = eps;
    row.checklist = evaluate_theorem(sys, cert, eps, theorem, theorem_opts);
    row.checklist_pass = row.checklist.overall;
    if (theorem == TheoremId::T1 || theorem == TheoremId::T2) {
      row.estimate = estimate_stability_in_probability(sys, cert, eps, stability_cfg, seed);
    } else {
      row.estimate = estimate_recurrence(sys, recurrence_cfg, eps, seed).estimate;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json LevelSetReport::to_json() const {
  nlohmann::json doc;
  doc["any_stationary"] = any_stationary;
  doc["note"] = "sampling heuristic; a clean screen is evidence, not proof";
  nlohmann::json levels_json = nlohmann::json::array();
  for (const auto& l : levels)
    levels_json.push_back({{"level", l.level},
                           {"n_points", l.n_points},
                           {"max_drift", l.max_drift},
                           {"stationary", l.stationary}});
  doc["levels"] = levels_json;
  return doc;
}

LevelSetReport check_level_set_nonstationarity(const SystemDefinition& sys,
                                               const std::function<double(const Vector&)>& E,
                                               const LevelSetConfig& cfg, double epsilon,
                                               std::uint64_t seed) {
  if (cfg.c_grid.empty()) throw std::invalid_argument("level grid must be nonempty");
  if (cfg.probe_lo.empty() || cfg.probe_lo.size() != cfg.probe_hi.size())
    throw std::invalid_argument("level-set search needs a probe box");

  LevelSetReport report;
  for (double c : cfg.c_grid) {
    if (c <= 0.0) throw std::invalid_argument("levels must be positive");
    // Find points with E = c by bisecting segments whose endpoints straddle
    // the level.
    auto stream = RandomStream::for_trial(seed, hashable_level(c));
    std::vector<Vector> points;
    auto admissible = [&](const Vector& y) {
      if (cfg.exclude && cfg.exclude->member(y)) return false;
      return sys.flow_set.contains(y, 0.0) || sys.jump_set.contains(y, 0.0);
    };
    for (int attempt = 0; attempt < cfg.max_search && static_cast<int>(points.size()) < cfg.n_per_level;
         ++attempt) {
      Vector a(cfg.probe_lo.size()), b(cfg.probe_lo.size());
      for (std::size_t d = 0; d < a.size(); ++d) {
        a[d] = stream.next_uniform(cfg.probe_lo[d], cfg.probe_hi[d]);
        b[d] = stream.next_uniform(cfg.probe_lo[d], cfg.probe_hi[d]);
      }
      double ea = E(a), eb = E(b);
      if ((ea - c) * (eb - c) > 0.0) continue;
      for (int it = 0; it < 80; ++it) {
        Vector mid(a.size());
        for (std::size_t d = 0; d < a.size(); ++d) mid[d] = 0.5 * (a[d] + b[d]);
        double em = E(mid);
        if ((ea - c) * (em - c) <= 0.0) {
          b = mid;
          eb = em;
        } else {
          a = mid;
          ea = em;
        }
        if (std::fabs(em - c) < 1e-10) break;
      }
      if (std::fabs(E(b) - c) < 1e-8 && admissible(b)) points.push_back(b);
    }
    if (points.empty())
      throw std::runtime_error("no points found on requested level after bounded search");

    LevelSetEntry entry;
    entry.level = c;
    entry.n_points = static_cast<int>(points.size());
    std::vector<double> drifts(points.size(), 0.0);
    map_indexed(points.size(), cfg.workers, [&](std::size_t i) {
      ExecConfig exec = cfg.exec;
      exec.T_total = cfg.duration;
      std::uint64_t solve_seed = mix64(seed ^ (i * 0xa24baed4963ee407ULL + hashable_level(c)));
      auto rec = solve(sys, points[i], epsilon, exec, solve_seed);
      double drift = 0.0;
      for (const auto& [t, j, y] : rec.arc.all_nodes()) drift = std::max(drift, std::fabs(E(y) - c));
      drifts[i] = drift;
    });
    entry.max_drift = 0.0;
    bool all_stationary = true;
    for (double d : drifts) {
      entry.max_drift = std::max(entry.max_drift, d);
      if (d > cfg.stationary_tol) all_stationary = false;
    }
    entry.stationary = all_stationary;
    report.any_stationary = report.any_stationary || entry.stationary;
    report.levels.push_back(entry);
  }
  return report;
}

}  // namespace sphds
