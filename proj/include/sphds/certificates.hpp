#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "sphds/grid.hpp"
#include "sphds/system.hpp"

#include "json.hpp"

namespace sphds {

/// Declared comparison-function classes. Declarations are spot-checked by
/// sampling, never certified.
enum class FunctionClass { g_infinity, k_infinity, pd_wrt_set, psd_wrt_set, continuous };

const char* to_string(FunctionClass c);

/// A comparison function: either radial (nonnegative scalar to nonnegative
/// scalar; the alpha/phi_z/rho_z family) or spatial (state to nonnegative
/// scalar; the phi_x/rho_x/rho_hat family).
struct ComparisonFunction {
  std::function<double(double)> radial;
  std::function<double(const Vector&)> spatial;
  FunctionClass declared_class = FunctionClass::continuous;

  double operator()(double s) const;
  double operator()(const Vector& p) const;
  bool defined() const { return static_cast<bool>(radial) || static_cast<bool>(spatial); }
};

enum class GradientMode { analytic, sampled };

/// A certificate function with its subgradient access: an analytic bundle
/// when available, gradient sampling otherwise.
struct DifferentiableFn {
  std::function<double(const Vector&)> value;
  std::function<SelectionBundle(const Vector&)> analytic_gradient;
  bool smooth = false;
  GradientMode mode = GradientMode::analytic;

  bool defined() const { return static_cast<bool>(value); }
};

struct ClarkeSamplingOptions {
  double radius = 1e-4;
  int n_samples = 64;
  double fd_step = 1e-6;
  std::uint64_t seed = 0x5eed;
};

/// Gradient sampling around y: central finite-difference gradients at
/// points perturbed uniformly within the radius ball. The bundle's convex
/// hull approximates the Clarke generalized gradient; functions flagged
/// smooth get the single finite-difference gradient at y itself.
SelectionBundle estimate_clarke_gradient(const std::function<double(const Vector&)>& f,
                                         const Vector& y, double radius, int n_samples,
                                         std::uint64_t seed, bool smooth = false,
                                         double fd_step = 1e-6);

/// Everything a verification run needs: the slow/fast certificate pair,
/// comparison functions, constants, and the target sets.
struct CertificateBundle {
  DifferentiableFn V;  // over x
  DifferentiableFn W;  // over (x, z)

  ComparisonFunction alpha1, alpha2;  // radial bounds on W
  ComparisonFunction alpha3, alpha4;  // radial bounds on V
  ComparisonFunction phi_x;           // spatial over x
  ComparisonFunction phi_z;           // radial
  ComparisonFunction rho_x, rho_4;    // spatial over x
  ComparisonFunction rho_z, rho_5;    // radial
  ComparisonFunction rho_hat;         // spatial over (x, z)

  double k_x = 0, k_z = 0, k_1 = 0, k_2 = 0, k_3 = 0, k_4 = 0, k_5 = 0;
  double c_x = 0, c_z = 0;
  double mu_F = 0, mu_J = 0;

  SetPredicate target_set;      // A, compact, slow coordinates
  SetPredicate recurrence_set;  // O, open bounded, slow coordinates
  /// Fast-block inflation of the lifted recurrence set used by indicator
  /// checks; the lifted graph set itself has empty interior.
  double tilde_O_delta = 0.1;
  bool A_is_closure_of_O = false;

  ClarkeSamplingOptions sampling;

  /// Subgradient bundle of V at x (analytic or sampled per mode).
  SelectionBundle grad_V(const Vector& x) const;
  /// Full subgradient bundle of W at (x, z).
  SelectionBundle grad_W(const Vector& y) const;
};

/// Splits full-state gradient selections into the x- or z-block.
SelectionBundle project_block(const SelectionBundle& grads, std::size_t begin, std::size_t len);

/// Composite certificate E_theta(y) = (1 - theta) V(x) + theta W(x, z).
std::function<double(const Vector&)> compose_foster(const CertificateBundle& cert, double theta,
                                                    int n1);

struct Thresholds {
  double epsilon_star = 0.0;
  double theta_star = 0.0;
};

/// epsilon* = k_x k_z / (k_2 k_z + k_1 k_3), theta* = k_3 / (k_1 + k_3).
Thresholds compute_thresholds(double k_x, double k_z, double k_1, double k_2, double k_3);

/// Time-scale threshold obtained from the 2x2 composite quadratic form;
/// coincides with the printed epsilon* when k_x = k_z or k_2 = 0.
double quadratic_form_threshold(double k_x, double k_z, double k_1, double k_2, double k_3);

struct FlowMargin {
  double lambda_min = 0.0;
  bool positive_definite = false;
};

/// Minimum eigenvalue of the symmetric form
///   [[(1-theta) k_x, -((1-theta) k_3 + theta k_1)/2],
///    [     .       ,  theta (k_z/epsilon - k_2)    ]]
/// whose positive definiteness certifies strict composite decrease along
/// flows in terms of (phi_x, phi_z).
FlowMargin composite_flow_margin(double k_x, double k_z, double k_1, double k_2, double k_3,
                                 double theta, double epsilon);

enum class CheckId { A2a, A2b, A3, A4a, A4b, A5, A6a, A6b, A7, A8, T1b, T3b };

const char* to_string(CheckId id);

/// Result of one grid/sampling inequality screen. A pass is evidence, not
/// a proof: the inequality held at every probed point within tolerance.
struct ViolationReport {
  std::string id;
  GridSpec grid;
  double max_violation = 0.0;  // <= tolerance means pass
  Vector witness;
  std::size_t witness_index = 0;
  std::size_t n_points = 0;
  double tolerance = 0.0;
  double mc_std = 0.0;  // standard error at the witness for sampled expectations
  bool pass = false;

  nlohmann::json to_json() const;
};

struct CheckOptions {
  GridSpec grid;  // over the full (x, z) state; slow-only checks use its prefix
  double tol = 1e-9;
  int n_mc = 10000;
  std::uint64_t seed = 0;
  int workers = 1;
  ReducedBuildOptions reduced;
};

/// Pointwise flow inequalities: A2b (fast decrease), A4b (reduced slow
/// decrease), A6a / A6b (interconnection bounds). Grid points are filtered
/// to the stated domain; the violation at a point maximizes over the
/// subgradient bundle and the flow selections.
ViolationReport check_flow_inequality(CheckId id, const SystemDefinition& sys,
                                      const CertificateBundle& cert, const CheckOptions& opts);

/// Sandwich bounds A2a / A4a, including push-forward probes of the jump map
/// over the input support.
ViolationReport check_bound_inequality(CheckId id, const SystemDefinition& sys,
                                       const CertificateBundle& cert, const CheckOptions& opts);

/// Expected-value jump conditions A3, A5, A7, A8 and the composite
/// conditions T1b / T3b. Exact enumeration for finite supports, Monte Carlo
/// with reported standard error otherwise.
ViolationReport check_jump_expectation(CheckId id, const SystemDefinition& sys,
                                       const CertificateBundle& cert, const CheckOptions& opts);

struct ExpectationResult {
  double mean = 0.0;
  double std_error = 0.0;  // zero for exact enumeration
};

/// E over v of the sup over the jump bundle at y of fn; the shared kernel
/// behind every expectation check, exposed for oracle testing.
ExpectationResult expect_sup_over_jump(const std::function<SelectionBundle(const Vector& v)>& jump_at,
                                       const std::function<double(const Vector&)>& fn,
                                       const JumpInputDistribution& dist, int n_mc,
                                       RandomStream stream);

enum class TheoremId { T1, T2, T3, T4 };

const char* to_string(TheoremId id);
std::optional<TheoremId> theorem_from_string(const std::string& s);

enum class CheckStatus { pass, fail, not_checked };

const char* to_string(CheckStatus s);

struct ChecklistEntry {
  std::string name;
  CheckStatus status = CheckStatus::not_checked;
  bool required = true;
  std::string detail;
};

/// Aggregated conditions of one stability/recurrence statement. The
/// overall verdict passes only when every required entry passes; it
/// applies to the full two-time-scale system and is a screen, never a
/// proof.
struct TheoremChecklist {
  TheoremId theorem = TheoremId::T1;
  bool overall = false;
  double epsilon = 0.0;
  Thresholds thresholds;
  std::vector<ChecklistEntry> entries;
  std::vector<ViolationReport> reports;

  const ChecklistEntry* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

struct TheoremOptions {
  CheckOptions checks;
  int class_probe_count = 64;
  /// Result of the level-set non-stationarity heuristic, supplied by the
  /// caller for the relaxed statements; absent means not checked.
  std::optional<bool> level_set_nonstationary;
};

TheoremChecklist evaluate_theorem(const SystemDefinition& sys, const CertificateBundle& cert,
                                  double epsilon, TheoremId theorem, const TheoremOptions& opts);

}  // namespace sphds
