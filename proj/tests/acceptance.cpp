// End-to-end acceptance suite: one pass/fail line per criterion, each with
// its runtime budget. Exit code 0 only if every criterion passes.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sphds/config.hpp"
#include "sphds/grid.hpp"
#include "sphds/models.hpp"
#include "sphds/montecarlo.hpp"

namespace fs = std::filesystem;
using namespace sphds;

namespace {

int g_failures = 0;
std::string g_cli_path;

struct Criterion {
  std::ostringstream log;
  bool ok = true;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      log << "    failed: " << what << "\n";
    }
  }
};

void run_criterion(int number, const std::string& title, double budget_seconds,
                   const std::function<void(Criterion&)>& body) {
  Criterion c;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.log << "    exception: " << e.what() << "\n";
  }
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (elapsed >= budget_seconds) {
    c.ok = false;
    c.log << "    over budget: " << elapsed << " s >= " << budget_seconds << " s\n";
  }
  std::printf("[%s] criterion %2d: %s (%.2fs, budget %.0fs)\n", c.ok ? "PASS" : "FAIL", number,
              title.c_str(), elapsed, budget_seconds);
  std::fputs(c.log.str().c_str(), stdout);
  if (!c.ok) ++g_failures;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------------------

void criterion_thresholds(Criterion& c) {
  auto t = compute_thresholds(1, 1, 1, 1, 1);
  c.require(t.epsilon_star == 0.5 && t.theta_star == 0.5, "unit constants give exactly (0.5, 0.5)");
  auto stream = RandomStream::from_seed(101);
  for (int i = 0; i < 100; ++i) {
    double kx = stream.next_uniform(0.1, 5.0), kz = stream.next_uniform(0.1, 5.0);
    double k1 = stream.next_uniform(0.1, 5.0), k2 = stream.next_uniform(0.0, 5.0);
    double k3 = stream.next_uniform(0.1, 5.0);
    auto base = compute_thresholds(kx, kz, k1, k2, k3);
    c.require(base.theta_star > 0.0 && base.theta_star < 1.0, "theta_star inside (0,1)");
    c.require(compute_thresholds(kx * 1.3, kz, k1, k2, k3).epsilon_star > base.epsilon_star,
              "epsilon_star increasing in k_x");
    c.require(compute_thresholds(kx, kz * 1.3, k1, k2, k3).epsilon_star > base.epsilon_star,
              "epsilon_star increasing in k_z");
    c.require(compute_thresholds(kx, kz, k1 * 1.3, k2, k3).epsilon_star < base.epsilon_star,
              "epsilon_star decreasing in k_1");
    c.require(compute_thresholds(kx, kz, k1, k2 + 0.4, k3).epsilon_star < base.epsilon_star,
              "epsilon_star decreasing in k_2");
    c.require(compute_thresholds(kx, kz, k1, k2, k3 * 1.3).epsilon_star < base.epsilon_star,
              "epsilon_star decreasing in k_3");
  }
}

void criterion_margin_consistency(Criterion& c) {
  auto stream = RandomStream::from_seed(202);
  for (int i = 0; i < 100; ++i) {
    double k = stream.next_uniform(0.1, 4.0);
    double k1 = stream.next_uniform(0.1, 4.0), k2 = stream.next_uniform(0.0, 4.0);
    double k3 = stream.next_uniform(0.1, 4.0);
    auto th = compute_thresholds(k, k, k1, k2, k3);
    for (double factor : {0.15, 0.5, 0.9, 0.999, 1.001, 1.4, 4.0}) {
      double eps = factor * th.epsilon_star;
      if (std::fabs(eps - th.epsilon_star) <= 1e-10) continue;
      auto m = composite_flow_margin(k, k, k1, k2, k3, th.theta_star, eps);
      c.require(m.positive_definite == (eps < th.epsilon_star),
                "pd flag equals eps < eps_star away from the boundary");
    }
    auto boundary = composite_flow_margin(k, k, k1, k2, k3, th.theta_star, th.epsilon_star);
    c.require(std::fabs(boundary.lambda_min) <= 1e-10 * std::max(1.0, k),
              "lambda_min vanishes at the shared threshold");
  }
}

void criterion_certificate_suite(Criterion& c) {
  auto ex = make_example("linear-tracker");
  const auto& prob = ex.problem;
  CheckOptions opts = prob.verification;  // 101x101 over [-3,3]^2, tol 1e-9

  for (CheckId id : {CheckId::A2a, CheckId::A4a}) {
    auto rep = check_bound_inequality(id, prob.system, prob.certificate, opts);
    c.require(rep.pass && rep.max_violation <= 1e-9,
              std::string(to_string(id)) + " max violation <= 1e-9");
  }
  for (CheckId id : {CheckId::A2b, CheckId::A4b, CheckId::A6a, CheckId::A6b}) {
    auto rep = check_flow_inequality(id, prob.system, prob.certificate, opts);
    c.require(rep.pass && rep.max_violation <= 1e-9,
              std::string(to_string(id)) + " max violation <= 1e-9");
  }
  auto t1b = check_jump_expectation(CheckId::T1b, prob.system, prob.certificate, opts);
  c.require(t1b.mc_std == 0.0, "T1b takes the exact enumeration path");
  c.require(t1b.max_violation < 0.0, "T1b margin strictly positive at every jump-set grid point");

  TheoremOptions topts;
  topts.checks = opts;
  auto pass_cl = evaluate_theorem(prob.system, prob.certificate, 0.1, TheoremId::T1, topts);
  c.require(pass_cl.overall, "T1 checklist passes at epsilon 0.1");
  auto fail_cl = evaluate_theorem(prob.system, prob.certificate, 0.6, TheoremId::T1, topts);
  c.require(!fail_cl.overall, "T1 checklist fails at epsilon 0.6");
  int failing = 0;
  std::string failing_name;
  for (const auto& e : fail_cl.entries)
    if (e.required && e.status != CheckStatus::pass) {
      ++failing;
      failing_name = e.name;
    }
  c.require(failing == 1 && failing_name == "epsilon_below_threshold",
            "exactly the epsilon entry fails at 0.6");
}

void criterion_tamper_detection(Criterion& c) {
  auto ex = make_example("linear-tracker");
  CertificateBundle cert = ex.problem.certificate;
  cert.k_z = 1.1;
  auto rep = check_flow_inequality(CheckId::A2b, ex.problem.system, cert,
                                   ex.problem.verification);
  c.require(!rep.pass, "tampered k_z is detected");
  c.require(near(rep.max_violation, 3.6, 1e-9), "violation equals the closed-form 3.6");
  c.require(rep.witness.size() == 2 && rep.witness[0] == -3.0 && rep.witness[1] == 3.0,
            "witness is the first lexicographic corner (-3, 3)");
}

void criterion_integrator_order(Criterion& c) {
  auto ex = make_example("linear-tracker");
  const auto& sys = ex.problem.system;
  const double eps = 0.5;
  const Vector y0 = {0.5, -0.25};

  FlowOptions ref_opts;
  ref_opts.h_base = 2.5e-3 / 100.0;
  ref_opts.T_max = 1.0;
  auto ref = integrate_flow(sys, y0, eps, ref_opts, 0.0, false).terminal_state();

  std::vector<double> errors;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    FlowOptions opts;
    opts.h_base = h;
    opts.T_max = 1.0;
    auto end = integrate_flow(sys, y0, eps, opts, 0.0, false).terminal_state();
    errors.push_back(std::hypot(end[0] - ref[0], end[1] - ref[1]));
  }
  const double target = std::pow(2.0, 3.5);
  c.require(errors[0] / errors[1] >= target, "error contraction h=1e-2 -> 5e-3 at least 2^3.5");
  c.require(errors[1] / errors[2] >= target, "error contraction h=5e-3 -> 2.5e-3 at least 2^3.5");
}

void criterion_executor_determinism(Criterion& c) {
  auto ex = make_example("linear-tracker");
  const auto& prob = ex.problem;
  ExecConfig cfg = prob.execution;
  cfg.T_total = 6.0;

  const std::size_t ensemble = 32;
  std::vector<std::string> serialized[3];
  int wi = 0;
  for (int workers : {1, 2, 8}) {
    serialized[wi].assign(ensemble, "");
    auto& out = serialized[wi];
    map_indexed(ensemble, workers, [&](std::size_t i) {
      auto stream = RandomStream::for_trial(7, i);
      Vector y0 = {stream.next_uniform(-2.5, 2.5), stream.next_uniform(-2.5, 2.5)};
      auto rec = solve(prob.system, y0, 0.1, cfg, mix64(7 ^ (i * 31 + 1)));
      out[i] = rec.to_csv() + rec.to_json().dump();
    });
    ++wi;
  }
  c.require(serialized[0] == serialized[1], "records identical between 1 and 2 workers");
  c.require(serialized[0] == serialized[2], "records identical between 1 and 8 workers");

  int replayed = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto full = solve(prob.system, {2.0, 2.0}, 0.1, cfg, seed);
    ExecConfig cut = cfg;
    cut.J_max = 1;
    auto part = solve(prob.system, {2.0, 2.0}, 0.1, cut, seed);
    if (full.inputs.empty()) continue;
    ++replayed;
    c.require(!part.inputs.empty() && part.inputs[0] == full.inputs[0],
              "truncation replay reproduces the first jump input");
    c.require(part.arc.jumps[0].post == full.arc.jumps[0].post,
              "truncation replay reproduces the first post-jump state");
  }
  c.require(replayed >= 90, "enough seeds exercised the jump path");
}

void criterion_expectation_oracle(Criterion& c) {
  auto ex = make_example("linear-tracker");
  const auto& sys = ex.problem.system;
  auto E = compose_foster(ex.problem.certificate, 0.5, 1);

  // Finite support: the check must equal straight enumeration bit for bit.
  auto stream = RandomStream::from_seed(404);
  for (int i = 0; i < 200; ++i) {
    Vector y = {stream.next_uniform(1.0, 3.0), stream.next_uniform(-3.0, 3.0)};
    auto got = expect_sup_over_jump([&](const Vector& v) { return sys.eval_jump(y, v); }, E,
                                    sys.jump_input, 0, RandomStream::from_seed(0));
    double enumerated = 0.0;
    for (std::size_t k = 0; k < sys.jump_input.atoms.size(); ++k) {
      auto bundle = sys.eval_jump(y, sys.jump_input.atoms[k]);
      double sup = -1e300;
      for (const auto& g : bundle.values) sup = std::max(sup, E(g));
      enumerated += sys.jump_input.probs[k] * sup;
    }
    c.require(got.mean == enumerated && got.std_error == 0.0,
              "finite-support expectation equals enumeration bit for bit");
  }

  // Sampled path: G(x,z,v) = (x/2 + v, z) under v ~ U[-1,1] gives
  // E[V(g)] = x^2/8 + 1/6.
  SystemDefinition mod = sys;
  mod.jump = [](const Vector& x, const Vector& z, const Vector& v) {
    SelectionBundle b;
    b.values.push_back({0.5 * x[0] + v[0], z[0]});
    return b;
  };
  mod.jump_input.kind = JumpInputDistribution::Kind::uniform_box;
  mod.jump_input.atoms.clear();
  mod.jump_input.probs.clear();
  mod.jump_input.lo = {-1.0};
  mod.jump_input.hi = {1.0};
  const auto& V = ex.problem.certificate.V;
  int within = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Vector y = {2.0, 0.0};
    auto r = expect_sup_over_jump(
        [&](const Vector& v) { return mod.eval_jump(y, v); },
        [&](const Vector& g) { return V.value({g[0]}); }, mod.jump_input, 10000,
        RandomStream::for_trial(505, static_cast<std::uint64_t>(rep)));
    double closed_form = 0.125 * 4.0 + 1.0 / 6.0;
    if (std::fabs(r.mean - closed_form) <= 3.0 * r.std_error) ++within;
  }
  c.require(within >= 99, "sampled moments within 3 mc_std in at least 99 of 100 repetitions");
}

void criterion_stability_estimate(Criterion& c) {
  auto ex = make_example("linear-tracker");
  StabilityProbeConfig cfg;
  cfg.delta = 0.25;
  cfg.eps_ball = 0.5;
  cfg.T = 20.0;
  cfg.trials = 500;
  cfg.exec = ex.problem.execution;
  cfg.workers = 0;
  auto est = estimate_stability_in_probability(ex.problem.system, ex.problem.certificate, 0.1,
                                               cfg, 0);
  c.require(est.n_trials == 500, "all 500 trials ran");
  c.require(est.point_estimate == 1.0, "every trial stayed in the containment ball");
  c.require(est.lower_bound >= 0.994, "zero-failure lower bound at least 0.994");
  c.require(near(est.lower_bound, std::pow(0.05, 1.0 / 500.0), 1e-9),
            "lower bound matches the closed form");
}

void criterion_recurrence_estimate(Criterion& c) {
  auto ex = make_example("noisy-reset");
  RecurrenceConfig cfg = ex.problem.recurrence;
  cfg.R = 5.0;
  cfg.tau = 10.0;
  cfg.delta_O = 0.1;
  cfg.trials = 1000;
  cfg.workers = 0;
  auto result = estimate_recurrence(ex.problem.system, cfg, 0.05, 0);
  c.require(result.estimate.n_trials == 1000, "all 1000 trials ran");
  c.require(result.estimate.lower_bound >= 0.95, "lower confidence bound at least 0.95");
  c.require(result.finite_escape_candidates == 0, "no finite-escape candidates");
}

void criterion_binomial_bound(Criterion& c) {
  for (int n : {1, 10, 100, 1000}) {
    double expected = std::pow(0.05, 1.0 / n);
    c.require(near(binomial_lower_bound(n, n, 0.95), expected, 1e-10),
              "zero-failure closed form at n = " + std::to_string(n));
  }
  const double p = 0.8, confidence = 0.95;
  const int n = 50, meta = 1000;
  int covered = 0;
  for (int m = 0; m < meta; ++m) {
    auto stream = RandomStream::for_trial(606, static_cast<std::uint64_t>(m));
    int s = 0;
    for (int i = 0; i < n; ++i)
      if (stream.next_uniform() < p) ++s;
    if (binomial_lower_bound(s, n, confidence) <= p) ++covered;
  }
  double frac = static_cast<double>(covered) / meta;
  c.require(frac >= confidence - 3.0 * std::sqrt(confidence * (1.0 - confidence) / meta),
            "coverage within 3 sigma of the confidence level");
}

void criterion_cli_round_trip(Criterion& c) {
  if (g_cli_path.empty()) {
    c.require(false, "no --cli path supplied");
    return;
  }
  fs::path dir = fs::temp_directory_path() / "sphds_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    std::string cmd = g_cli_path + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };

  c.require(run("examples --out " + (dir / "cfgs").string()) == 0, "examples emits configs");
  std::string grid = " --grid 41";
  c.require(run("verify --config linear-tracker --theorem T1 --epsilon 0.1 --out " +
                (dir / "builtin").string() + grid) == 0,
            "verify on the built-in passes");
  c.require(run("verify --config " + (dir / "cfgs" / "linear-tracker.json").string() +
                " --theorem T1 --epsilon 0.1 --out " + (dir / "loaded").string() + grid) == 0,
            "verify on the emitted config passes");
  for (const char* file : {"checklist.json", "violations.json"}) {
    std::string a = slurp(dir / "builtin" / file);
    std::string b = slurp(dir / "loaded" / file);
    c.require(!a.empty() && a == b, std::string("byte-identical ") + file);
  }

  // Documented exit codes: 1 checklist fail, 2 bad config, 3 initial
  // condition outside both sets, 4 missing certificate fields.
  c.require(run("verify --config linear-tracker --theorem T1 --epsilon 0.6 --out " +
                (dir / "fail").string() + grid) == 1,
            "failing checklist exits 1");
  {
    std::ofstream bad(dir / "broken.json");
    bad << "this is not json";
  }
  c.require(run("verify --config " + (dir / "broken.json").string() + " --theorem T1 --out " +
                (dir / "b1").string()) == 2,
            "unparsable config exits 2");

  auto doc = nlohmann::json::parse(slurp(dir / "cfgs" / "linear-tracker.json"));
  doc["system"]["flow_set_x"] = {{"type", "box"}, {"lo", {-1.0}}, {"hi", {1.0}}};
  doc["system"]["jump_set_x"] = {{"type", "ball_complement"}, {"center", {0.0}}, {"radius", 5.0}};
  {
    std::ofstream out(dir / "bounded.json");
    out << doc.dump(2);
  }
  c.require(run("simulate --config " + (dir / "bounded.json").string() + " --y0 \"3,0\" --out " +
                (dir / "s3").string()) == 3,
            "initial condition outside both sets exits 3");

  doc = nlohmann::json::parse(slurp(dir / "cfgs" / "linear-tracker.json"));
  doc["certificate"].erase("W");
  {
    std::ofstream out(dir / "noW.json");
    out << doc.dump(2);
  }
  c.require(run("verify --config " + (dir / "noW.json").string() + " --theorem T1 --out " +
                (dir / "m4").string()) == 4,
            "missing certificate field exits 4");
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];

  run_criterion(1, "threshold formulas and monotonicity", 1.0, criterion_thresholds);
  run_criterion(2, "composite margin matches the threshold when k_x = k_z", 1.0,
                criterion_margin_consistency);
  run_criterion(3, "certificate suite on linear-tracker", 10.0, criterion_certificate_suite);
  run_criterion(4, "tampered certificate detection", 10.0, criterion_tamper_detection);
  run_criterion(5, "integrator order", 30.0, criterion_integrator_order);
  run_criterion(6, "executor determinism and causality", 30.0, criterion_executor_determinism);
  run_criterion(7, "jump-expectation oracle", 30.0, criterion_expectation_oracle);
  run_criterion(8, "empirical stability in probability", 60.0, criterion_stability_estimate);
  run_criterion(9, "empirical recurrence", 120.0, criterion_recurrence_estimate);
  run_criterion(10, "exact binomial bound and coverage", 60.0, criterion_binomial_bound);
  run_criterion(11, "CLI round trip reproduces reports byte for byte", 10.0,
                criterion_cli_round_trip);

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
