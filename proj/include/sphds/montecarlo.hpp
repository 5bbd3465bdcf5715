#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sphds/certificates.hpp"
#include "sphds/executor.hpp"

#include "json.hpp"

namespace sphds {

/// Exact one-sided Clopper-Pearson lower confidence bound on a binomial
/// success probability (bisection on the exact binomial tail).
double binomial_lower_bound(int n_success, int n_trials, double confidence);

/// Aggregate of a seeded trial ensemble with its exact binomial lower
/// confidence bound. Deterministic given (system, config, seed) for any
/// worker count.
struct EnsembleEstimate {
  int n_trials = 0;
  int n_success = 0;
  double point_estimate = 0.0;
  double lower_bound = 0.0;
  double confidence = 0.95;
  std::string criterion;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Per-trial row of an ensemble run, serialized to CSV.
struct TrialOutcome {
  int trial = 0;
  bool success = false;
  double hitting_time = -1.0;  // t + j of the first target visit, or -1
  std::string stop_reason;
};

std::string trials_to_csv(const std::vector<TrialOutcome>& trials);

/// Distance to the lifted target set {x in A, z in M(x)}, measured
/// operationally as sqrt(|x|_A^2 + |z|_M(x)^2). Sampling and containment
/// both use this metric so the two sides of every probe agree.
double lifted_target_distance(const SystemDefinition& sys, const SetPredicate& target_x,
                              const Vector& y);

struct StabilityProbeConfig {
  double delta = 0.25;      // initial-condition inflation of the lifted target
  double eps_ball = 0.5;    // containment radius (open ball)
  double attract_fraction = 0.1;  // inner radius = attract_fraction * eps_ball
  double T = 20.0;          // attractivity probe time
  int trials = 500;
  double confidence = 0.95;
  int workers = 0;  // 0 = all available
  ExecConfig exec;  // exec.T_total is raised to cover T when needed
};

/// Success of one solution from y0: stays in the eps_ball inflation of the
/// lifted target over its whole domain and sits inside the inner ball for
/// all t + j >= T.
bool stability_trial(const SystemDefinition& sys, const CertificateBundle& cert, double epsilon,
                     const Vector& y0, const StabilityProbeConfig& cfg, std::uint64_t solve_seed);

/// Empirical screen of uniform global asymptotic stability in probability:
/// N initial conditions uniform on the delta-inflated lifted target
/// intersected with C union D, each solved and tested by stability_trial.
EnsembleEstimate estimate_stability_in_probability(const SystemDefinition& sys,
                                                   const CertificateBundle& cert, double epsilon,
                                                   const StabilityProbeConfig& cfg,
                                                   std::uint64_t seed,
                                                   std::vector<TrialOutcome>* trials = nullptr);

struct RecurrenceConfig {
  SetPredicate O_slow;      // open bounded target on the slow block
  double delta_O = 0.1;     // fast-block inflation radius of the lifted target
  double R = 5.0;           // initial conditions drawn from the R-ball
  double tau = 10.0;        // hitting horizon on t + j
  int trials = 1000;
  double confidence = 0.95;
  int workers = 0;
  ExecConfig exec;
};

struct RecurrenceOutcome {
  bool success = false;
  double hitting_time = -1.0;
  bool finite_escape_candidate = false;
  StopReason stop_reason = StopReason::complete_horizon;
};

/// Success of one solution: it either stops (maximal, not via blow-up)
/// before tau, or visits {x in O, |z - m(x)| < delta_O} by tau. Blow-ups
/// fail and are counted as finite-escape candidates.
RecurrenceOutcome recurrence_trial(const SystemDefinition& sys, const RecurrenceConfig& cfg,
                                   double epsilon, const Vector& y0, std::uint64_t solve_seed);

struct RecurrenceEstimate {
  EnsembleEstimate estimate;
  int finite_escape_candidates = 0;
  /// The lifted target is probed through its delta_O inflation; the graph
  /// set itself has empty interior.
  double delta_O = 0.0;
};

RecurrenceEstimate estimate_recurrence(const SystemDefinition& sys, const RecurrenceConfig& cfg,
                                       double epsilon, std::uint64_t seed,
                                       std::vector<TrialOutcome>* trials = nullptr);

struct SweepRow {
  double epsilon = 0.0;
  bool checklist_pass = false;
  TheoremChecklist checklist;
  EnsembleEstimate estimate;
};

/// For each epsilon: the theorem checklist plus the matching empirical
/// estimator (stability for T1/T2, recurrence for T3/T4).
std::vector<SweepRow> sweep_epsilon(const SystemDefinition& sys, const CertificateBundle& cert,
                                    const std::vector<double>& epsilons, TheoremId theorem,
                                    const TheoremOptions& theorem_opts,
                                    const StabilityProbeConfig& stability_cfg,
                                    const RecurrenceConfig& recurrence_cfg, std::uint64_t seed);

struct LevelSetConfig {
  std::vector<double> c_grid;
  int n_per_level = 8;
  double duration = 5.0;
  Vector probe_lo, probe_hi;  // search box for level-set points
  std::optional<SetPredicate> exclude;  // full-state exclusion (lifted target)
  double stationary_tol = 1e-6;
  int max_search = 4000;
  ExecConfig exec;
  int workers = 0;
};

struct LevelSetEntry {
  double level = 0.0;
  int n_points = 0;
  double max_drift = 0.0;  // max |E(y(t,j)) - c| over all sampled solutions
  bool stationary = false;
};

struct LevelSetReport {
  std::vector<LevelSetEntry> levels;
  bool any_stationary = false;

  nlohmann::json to_json() const;
};

/// Heuristic screen for the no-stationary-solution conditions: solutions
/// started on each sampled level set must drift from the level. Flagged
/// levels are candidates only; the screen is explicitly non-conclusive.
LevelSetReport check_level_set_nonstationarity(const SystemDefinition& sys,
                                               const std::function<double(const Vector&)>& E,
                                               const LevelSetConfig& cfg, double epsilon,
                                               std::uint64_t seed);

}  // namespace sphds
