#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sphds/models.hpp"
#include "sphds/montecarlo.hpp"

using namespace sphds;

namespace {

TheoremOptions default_opts(const NamedExample& ex) {
  TheoremOptions opts;
  opts.checks = ex.problem.verification;
  opts.checks.workers = 1;
  return opts;
}

// Runs the level-set drift screen the relaxed statements need.
bool level_screen(const NamedExample& ex, TheoremId theorem) {
  const auto& prob = ex.problem;
  auto th = compute_thresholds(prob.certificate.k_x, prob.certificate.k_z, prob.certificate.k_1,
                               prob.certificate.k_2, prob.certificate.k_3);
  auto E = compose_foster(prob.certificate, th.theta_star, prob.system.n1);
  LevelSetConfig cfg;
  cfg.c_grid = {0.5, 1.0};
  cfg.probe_lo = prob.verification.grid.lo;
  cfg.probe_hi = prob.verification.grid.hi;
  cfg.exec = prob.execution;
  cfg.workers = 1;
  if (theorem == TheoremId::T4) {
    const auto& sys = prob.system;
    const auto& cert = prob.certificate;
    SetPredicate lifted;
    lifted.member = [&sys, &cert](const Vector& y) {
      auto s = sys.split(y);
      if (!cert.recurrence_set.member(s.x)) return false;
      Vector m = sys.qss_point(s.x);
      Vector diff(s.z.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s.z[i] - m[i];
      return norm(diff) < cert.tilde_O_delta;
    };
    cfg.exclude = lifted;
  }
  auto rep = check_level_set_nonstationarity(prob.system, E, cfg, ex.default_epsilon, 40);
  return !rep.any_stationary;
}

}  // namespace

TEST_CASE("example registry") {
  CHECK(example_names().size() == 3);
  CHECK_THROWS_AS(make_example("no-such-example"), std::invalid_argument);
  for (const auto& name : example_names()) {
    auto ex = make_example(name);
    CHECK(ex.name == name);
    CHECK_FALSE(ex.notes.empty());
    CHECK(ex.problem.system.n1 == 1);
    CHECK(ex.problem.system.n2 == 1);
  }
}

TEST_CASE("tracker thresholds and jump moment") {
  auto ex = make_example("linear-tracker");
  const auto& c = ex.problem.certificate;
  auto th = compute_thresholds(c.k_x, c.k_z, c.k_1, c.k_2, c.k_3);
  CHECK(th.epsilon_star == 0.5);
  CHECK(th.theta_star == 0.5);

  // E[v^2] over the two-atom input, by exact enumeration.
  const auto& dist = ex.problem.system.jump_input;
  double second_moment = 0.0;
  for (std::size_t i = 0; i < dist.atoms.size(); ++i)
    second_moment += dist.probs[i] * dist.atoms[i][0] * dist.atoms[i][0];
  CHECK(second_moment == doctest::Approx(0.153).epsilon(1e-12));
}

TEST_CASE("reset example bounds") {
  auto ex = make_example("noisy-reset");
  const auto& c = ex.problem.certificate;
  // alpha4 dominates V through the triangle inequality |x| <= |x|_A + 1.
  for (double x = -5.0; x <= 5.0; x += 0.1) {
    double dist = c.target_set.distance({x});
    CHECK(0.5 * x * x <= c.alpha4(dist) + 1e-12);
    CHECK(c.alpha3(dist) <= 0.5 * x * x + 1e-12);
  }
  CHECK(c.mu_J == 2.25);
  CHECK(c.alpha4.declared_class == FunctionClass::g_infinity);
}

TEST_CASE("shipped certificates pass their own deterministic screens") {
  for (const auto& name : example_names()) {
    CAPTURE(name);
    auto ex = make_example(name);
    const auto& prob = ex.problem;
    CheckOptions opts = prob.verification;
    opts.workers = 1;
    for (CheckId id : {CheckId::A2a, CheckId::A4a}) {
      auto rep = check_bound_inequality(id, prob.system, prob.certificate, opts);
      CAPTURE(rep.id);
      CHECK(rep.pass);
      CHECK(rep.max_violation <= 1e-9);
    }
    for (CheckId id : {CheckId::A2b, CheckId::A4b, CheckId::A6a, CheckId::A6b}) {
      auto rep = check_flow_inequality(id, prob.system, prob.certificate, opts);
      CAPTURE(rep.id);
      CHECK(rep.pass);
      CHECK(rep.max_violation <= 1e-9);
    }
  }
}

TEST_CASE("expected verdicts per statement") {
  SUBCASE("linear-tracker") {
    auto ex = make_example("linear-tracker");
    auto opts = default_opts(ex);
    auto t1 = evaluate_theorem(ex.problem.system, ex.problem.certificate, ex.default_epsilon,
                               TheoremId::T1, opts);
    CHECK(t1.overall == ex.expected.at(TheoremId::T1));
    auto high = evaluate_theorem(ex.problem.system, ex.problem.certificate, 0.6, TheoremId::T1,
                                 opts);
    CHECK_FALSE(high.overall);
    int failing = 0;
    for (const auto& e : high.entries)
      if (e.required && e.status != CheckStatus::pass) ++failing;
    CHECK(failing == 1);
  }
  SUBCASE("weak-decrease") {
    auto ex = make_example("weak-decrease");
    auto opts = default_opts(ex);
    opts.level_set_nonstationary = level_screen(ex, TheoremId::T2);
    auto t2 = evaluate_theorem(ex.problem.system, ex.problem.certificate, ex.default_epsilon,
                               TheoremId::T2, opts);
    CHECK(t2.overall == ex.expected.at(TheoremId::T2));
    auto t1 = evaluate_theorem(ex.problem.system, ex.problem.certificate, ex.default_epsilon,
                               TheoremId::T1, opts);
    CHECK(t1.overall == ex.expected.at(TheoremId::T1));
    const auto* phi = t1.find("phi_classes");
    REQUIRE(phi != nullptr);
    CHECK(phi->status == CheckStatus::fail);  // psd only, the strong form needs pd
  }
  SUBCASE("noisy-reset") {
    auto ex = make_example("noisy-reset");
    auto opts = default_opts(ex);
    auto t3 = evaluate_theorem(ex.problem.system, ex.problem.certificate, ex.default_epsilon,
                               TheoremId::T3, opts);
    CHECK(t3.overall == ex.expected.at(TheoremId::T3));
    opts.level_set_nonstationary = level_screen(ex, TheoremId::T4);
    auto t4 = evaluate_theorem(ex.problem.system, ex.problem.certificate, ex.default_epsilon,
                               TheoremId::T4, opts);
    CHECK(t4.overall == ex.expected.at(TheoremId::T4));
    auto t1 = evaluate_theorem(ex.problem.system, ex.problem.certificate, ex.default_epsilon,
                               TheoremId::T1, opts);
    CHECK(t1.overall == ex.expected.at(TheoremId::T1));
  }
}

TEST_CASE("emitted configs reload into identical problems") {
  for (const auto& name : example_names()) {
    CAPTURE(name);
    auto ex = make_example(name);
    auto reloaded = load_problem(nlohmann::json::parse(ex.config.dump()));
    auto stream = RandomStream::from_seed(3);
    for (int i = 0; i < 30; ++i) {
      Vector x = {stream.next_uniform(-3.0, 3.0)};
      Vector z = {stream.next_uniform(-3.0, 3.0)};
      auto a = ex.problem.system.flow_x(x, z);
      auto b = reloaded.system.flow_x(x, z);
      CHECK(a.values == b.values);
      CHECK(ex.problem.certificate.V.value(x) == reloaded.certificate.V.value(x));
      CHECK(ex.problem.certificate.W.value(concat(x, z)) ==
            reloaded.certificate.W.value(concat(x, z)));
    }
  }
}
