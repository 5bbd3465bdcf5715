#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "sphds/config.hpp"
#include "sphds/models.hpp"

using namespace sphds;
using nlohmann::json;

namespace {

json minimal_config() {
  json doc;
  doc["name"] = "minimal";
  doc["system"] = {
      {"n1", 1},
      {"n2", 1},
      {"flow_x", {{"selections", {{json{{"poly", {{{"c", -1.0}, {"m", {{"x0", 1}}}}}}}}}}}},
      {"flow_z", {{"selections", {{json{{"poly", {{{"c", -1.0}, {"m", {{"z0", 1}}}}}}}}}}}},
      {"jump", {{"selections", {{json{{"var", "v0"}}, json{{"var", "z0"}}}}}}},
      {"qss", {{"selections", {{json{{"const", 0.0}}}}}}},
      {"flow_set_x", {{"type", "all"}}},
      {"flow_set_z", {{"type", "all"}}},
      {"jump_set_x", {{"type", "ball_complement"}, {"center", {0.0}}, {"radius", 2.0}}},
      {"jump_set_z", {{"type", "all"}}},
      {"jump_input", {{"type", "finite"}, {"atoms", {{0.5}}}, {"probs", {1.0}}}}};
  return doc;
}

}  // namespace

TEST_CASE("minimal config loads with defaults") {
  auto prob = load_problem(minimal_config());
  CHECK(prob.name == "minimal");
  CHECK(prob.system.n1 == 1);
  auto f = prob.system.flow_x({2.0}, {1.0});
  REQUIRE(f.size() == 1);
  CHECK(f.values[0][0] == doctest::Approx(-2.0));
  auto g = prob.system.jump({3.0}, {1.5}, {0.5});
  CHECK(g.values[0][0] == doctest::Approx(0.5));
  CHECK(g.values[0][1] == doctest::Approx(1.5));
  // defaults
  CHECK(prob.execution.flow.h_base == doctest::Approx(0.01));
  CHECK(prob.execution.J_max == 10000);
  CHECK(prob.verification.grid.counts == std::vector<int>{101, 101});
  CHECK(prob.verification.tol == doctest::Approx(1e-9));
  CHECK(prob.stability.trials == 500);
  CHECK(prob.recurrence.trials == 1000);
  // no certificate block: nothing defined
  CHECK_FALSE(prob.certificate.V.defined());
}

TEST_CASE("multi-selection maps preserve order and the convexified flag") {
  json doc = minimal_config();
  doc["system"]["flow_x"] = {
      {"selections", {{json{{"const", 1.0}}}, {json{{"const", -1.0}}}}},
      {"convexified", true}};
  auto prob = load_problem(doc);
  auto f = prob.system.flow_x({0.0}, {0.0});
  REQUIRE(f.size() == 2);
  CHECK(f.values[0][0] == 1.0);
  CHECK(f.values[1][0] == -1.0);
  CHECK(f.convexified);
}

TEST_CASE("malformed configs raise diagnostics") {
  SUBCASE("missing system") {
    json doc;
    doc["name"] = "x";
    CHECK_THROWS_WITH_AS(load_problem(doc), doctest::Contains("missing required key 'system'"),
                         std::invalid_argument);
  }
  SUBCASE("missing map") {
    json doc = minimal_config();
    doc["system"].erase("flow_z");
    CHECK_THROWS_AS(load_problem(doc), std::invalid_argument);
  }
  SUBCASE("wrong selection arity") {
    json doc = minimal_config();
    doc["system"]["jump"] = {{"selections", {{json{{"var", "v0"}}}}}};  // needs n1+n2 components
    CHECK_THROWS_AS(load_problem(doc), std::invalid_argument);
  }
  SUBCASE("unknown set type") {
    json doc = minimal_config();
    doc["system"]["flow_set_x"] = {{"type", "donut"}};
    CHECK_THROWS_AS(load_problem(doc), std::invalid_argument);
  }
  SUBCASE("bad probabilities") {
    json doc = minimal_config();
    doc["system"]["jump_input"]["probs"] = {0.7};
    CHECK_THROWS_AS(load_problem(doc), std::invalid_argument);
  }
  SUBCASE("dimension mismatch in sets") {
    json doc = minimal_config();
    doc["system"]["jump_set_x"] = {{"type", "box"}, {"lo", {-1.0, -1.0}}, {"hi", {1.0, 1.0}}};
    CHECK_THROWS_AS(load_problem(doc), std::invalid_argument);
  }
  SUBCASE("unknown overlap policy") {
    json doc = minimal_config();
    doc["execution"] = {{"overlap_policy", "coin_toss"}};
    CHECK_THROWS_AS(load_problem(doc), std::invalid_argument);
  }
}

TEST_CASE("set vocabulary") {
  auto box = load_set(json{{"type", "box"}, {"lo", {-1.0}}, {"hi", {1.0}}}, 1);
  CHECK(box.member({0.5}));
  CHECK_FALSE(box.member({1.5}));
  REQUIRE(box.bounds.has_value());
  auto half = load_set(json{{"type", "halfspace"}, {"normal", {1.0}}, {"offset", 0.0}}, 1);
  CHECK(half.member({-2.0}));
  CHECK_FALSE(half.member({0.5}));
  auto all = load_set(json{{"type", "all"}}, 3);
  CHECK(all.member({9.0, 9.0, 9.0}));
  CHECK(all.proximity({9.0, 9.0, 9.0}) < 0.0);
}

TEST_CASE("certificate block resolves classes and gradient modes") {
  json doc = minimal_config();
  doc["certificate"] = {
      {"V", {{"poly", {{{"c", 0.5}, {"m", {{"x0", 2}}}}}}}},
      {"W", {{"poly", {{{"c", 0.5}, {"m", {{"z0", 2}}}}}}}},
      {"gradient_mode", "sampled"},
      {"smooth", true},
      {"alpha1", {{"poly", {{{"c", 1.0}, {"m", {{"s", 2}}}}}}}},
      {"classes", {{"alpha1", "kinf"}}},
      {"constants", {{"k_x", 1.0}, {"k_z", 1.0}, {"k_1", 1.0}, {"k_2", 0.0}, {"k_3", 1.0}}},
      {"target_set", {{"type", "ball"}, {"center", {0.0}}, {"radius", 0.5}}}};
  auto prob = load_problem(doc);
  const auto& cert = prob.certificate;
  CHECK(cert.V.mode == GradientMode::sampled);
  CHECK(cert.V.smooth);
  CHECK(cert.alpha1.declared_class == FunctionClass::k_infinity);
  CHECK(cert.alpha1(2.0) == doctest::Approx(4.0));
  CHECK_FALSE(cert.rho_hat.defined());
  CHECK(cert.target_set.distance({1.0}) == doctest::Approx(0.5));

  SUBCASE("sampled gradients flow through the bundle accessor") {
    auto g = cert.grad_V({2.0});
    REQUIRE(g.size() == 1);  // smooth: single finite-difference gradient
    CHECK(g.values[0][0] == doctest::Approx(2.0).epsilon(1e-7));
  }
}

TEST_CASE("file loading") {
  auto doc = minimal_config();
  const char* path = "test_config_tmp.json";
  {
    std::ofstream out(path);
    out << doc.dump();
  }
  auto prob = load_problem_file(path);
  CHECK(prob.name == "minimal");
  std::remove(path);
  CHECK_THROWS_AS(load_problem_file("definitely_not_here.json"), std::invalid_argument);
}

TEST_CASE("loader output is deterministic across repeated loads") {
  auto ex = make_example("noisy-reset");
  auto a = load_problem(ex.config);
  auto b = load_problem(ex.config);
  auto stream = RandomStream::from_seed(12);
  for (int i = 0; i < 20; ++i) {
    Vector y = {stream.next_uniform(-3.0, 3.0), stream.next_uniform(-3.0, 3.0)};
    CHECK(a.certificate.W.value(y) == b.certificate.W.value(y));
    auto ga = a.certificate.grad_W(y);
    auto gb = b.certificate.grad_W(y);
    CHECK(ga.values == gb.values);
  }
}
