#include "sphds/config.hpp"

#include <fstream>
#include <stdexcept>

#include "sphds/expr.hpp"

namespace sphds {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument("config: " + what); }

const json& need(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) bad(std::string("missing required key '") + key + "'");
  return *it;
}

double get_or(const json& doc, const char* key, double fallback) {
  auto it = doc.find(key);
  return it == doc.end() ? fallback : it->get<double>();
}

int get_or(const json& doc, const char* key, int fallback) {
  auto it = doc.find(key);
  return it == doc.end() ? fallback : it->get<int>();
}

std::string get_or(const json& doc, const char* key, const std::string& fallback) {
  auto it = doc.find(key);
  return it == doc.end() ? fallback : it->get<std::string>();
}

// A selection-bundle map: list of selections, each a list of component
// expressions over the given layout.
struct CompiledBundleMap {
  std::vector<std::vector<ExprPtr>> selections;
  bool convexified = false;
  int n_slots = 0;

  SelectionBundle eval(const Vector& vars) const {
    SelectionBundle out;
    out.convexified = convexified;
    out.values.reserve(selections.size());
    for (const auto& sel : selections) {
      Vector value(sel.size());
      for (std::size_t i = 0; i < sel.size(); ++i) value[i] = sel[i]->value(vars.data());
      out.values.push_back(std::move(value));
    }
    return out;
  }
};

CompiledBundleMap compile_bundle_map(const json& spec, const VarLayout& layout, int out_dim) {
  CompiledBundleMap map;
  map.n_slots = layout.total();
  const json& sels = need(spec, "selections");
  if (!sels.is_array() || sels.empty()) bad("'selections' must be a nonempty array");
  for (const auto& sel : sels) {
    if (!sel.is_array() || static_cast<int>(sel.size()) != out_dim)
      bad("each selection must list exactly " + std::to_string(out_dim) + " component expressions");
    std::vector<ExprPtr> comps;
    for (const auto& comp : sel) comps.push_back(compile_expr(comp, layout));
    map.selections.push_back(std::move(comps));
  }
  if (spec.contains("convexified")) map.convexified = spec.at("convexified").get<bool>();
  return map;
}

FunctionClass parse_class(const std::string& s) {
  if (s == "kinf" || s == "k_infinity") return FunctionClass::k_infinity;
  if (s == "ginf" || s == "g_infinity") return FunctionClass::g_infinity;
  if (s == "pd" || s == "pd_wrt_set") return FunctionClass::pd_wrt_set;
  if (s == "psd" || s == "psd_wrt_set") return FunctionClass::psd_wrt_set;
  if (s == "continuous") return FunctionClass::continuous;
  bad("unknown function class '" + s + "'");
}

ComparisonFunction load_radial(const json& cert, const char* key, const json& classes) {
  ComparisonFunction f;
  auto it = cert.find(key);
  if (it == cert.end()) return f;
  VarLayout layout{0, 0, 0, true};
  ExprPtr e = compile_expr(*it, layout);
  f.radial = [e](double s) { return e->value(&s); };
  f.declared_class = parse_class(get_or(classes, key, std::string("continuous")));
  return f;
}

ComparisonFunction load_spatial(const json& cert, const char* key, const json& classes,
                                const VarLayout& layout) {
  ComparisonFunction f;
  auto it = cert.find(key);
  if (it == cert.end()) return f;
  ExprPtr e = compile_expr(*it, layout);
  f.spatial = [e](const Vector& p) { return e->value(p.data()); };
  f.declared_class = parse_class(get_or(classes, key, std::string("continuous")));
  return f;
}

DifferentiableFn load_certificate_fn(const json& cert, const char* key, const VarLayout& layout,
                                     GradientMode mode, bool smooth) {
  DifferentiableFn f;
  auto it = cert.find(key);
  if (it == cert.end()) return f;
  ExprPtr e = compile_expr(*it, layout);
  f.value = [e](const Vector& p) { return e->value(p.data()); };
  f.mode = mode;
  f.smooth = smooth;
  if (mode == GradientMode::analytic) {
    const int n = layout.total();
    f.analytic_gradient = [e, n](const Vector& p) {
      SelectionBundle out;
      out.values = e->gradients(p.data(), n);
      out.convexified = out.values.size() > 1;
      return out;
    };
  }
  return f;
}

SelectionPolicy parse_selection_policy(const json& doc, const char* key) {
  std::string s = get_or(doc, key, std::string("first"));
  if (s == "first") return SelectionPolicy::first();
  if (s == "random" || s == "random_per_step") return SelectionPolicy::random();
  if (s.rfind("index:", 0) == 0) return SelectionPolicy::at(std::stoi(s.substr(6)));
  bad("unknown selection policy '" + s + "'");
}

}  // namespace

SetPredicate load_set(const json& spec, int dim) {
  const std::string type = need(spec, "type").get<std::string>();
  if (type == "all") return make_all_set(dim);
  if (type == "box") {
    Vector lo = need(spec, "lo").get<Vector>(), hi = need(spec, "hi").get<Vector>();
    if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
      bad("box bounds have the wrong dimension");
    return make_box_set(std::move(lo), std::move(hi));
  }
  if (type == "ball" || type == "ball_complement") {
    Vector center = need(spec, "center").get<Vector>();
    double radius = need(spec, "radius").get<double>();
    if (static_cast<int>(center.size()) != dim) bad("ball center has the wrong dimension");
    if (radius < 0.0) bad("ball radius must be nonnegative");
    return type == "ball" ? make_ball_set(std::move(center), radius)
                          : make_ball_complement_set(std::move(center), radius);
  }
  if (type == "halfspace") {
    Vector normal = need(spec, "normal").get<Vector>();
    double offset = need(spec, "offset").get<double>();
    if (static_cast<int>(normal.size()) != dim) bad("halfspace normal has the wrong dimension");
    return make_halfspace_set(std::move(normal), offset);
  }
  bad("unknown set type '" + type + "'");
}

LoadedProblem load_problem(const json& doc) {
  LoadedProblem out;
  out.source = doc;
  out.name = get_or(doc, "name", std::string("unnamed"));
  out.default_epsilon = get_or(doc, "epsilon", 0.1);

  // --- system ---
  const json& sysj = need(doc, "system");
  SystemDefinition& sys = out.system;
  sys.n1 = need(sysj, "n1").get<int>();
  sys.n2 = need(sysj, "n2").get<int>();
  if (sys.n1 < 1 || sys.n2 < 1) bad("n1 and n2 must be at least 1");

  const VarLayout flow_layout{sys.n1, sys.n2, 0, false};
  const VarLayout slow_layout{sys.n1, 0, 0, false};

  const json& inputj = need(sysj, "jump_input");
  JumpInputDistribution& dist = sys.jump_input;
  {
    const std::string type = need(inputj, "type").get<std::string>();
    if (type == "finite") {
      dist.kind = JumpInputDistribution::Kind::finite_support;
      for (const auto& a : need(inputj, "atoms")) dist.atoms.push_back(a.get<Vector>());
      dist.probs = need(inputj, "probs").get<std::vector<double>>();
    } else if (type == "uniform_box") {
      dist.kind = JumpInputDistribution::Kind::uniform_box;
      dist.lo = need(inputj, "lo").get<Vector>();
      dist.hi = need(inputj, "hi").get<Vector>();
    } else {
      bad("unknown jump_input type '" + type + "'");
    }
    dist.validate();
  }
  const VarLayout jump_layout{sys.n1, sys.n2, dist.dim(), false};

  auto fx = compile_bundle_map(need(sysj, "flow_x"), flow_layout, sys.n1);
  auto fz = compile_bundle_map(need(sysj, "flow_z"), flow_layout, sys.n2);
  auto g = compile_bundle_map(need(sysj, "jump"), jump_layout, sys.n1 + sys.n2);
  auto m = compile_bundle_map(need(sysj, "qss"), slow_layout, sys.n2);
  sys.flow_x = [fx](const Vector& x, const Vector& z) { return fx.eval(concat(x, z)); };
  sys.flow_z = [fz](const Vector& x, const Vector& z) { return fz.eval(concat(x, z)); };
  sys.jump = [g](const Vector& x, const Vector& z, const Vector& v) {
    return g.eval(concat(concat(x, z), v));
  };
  sys.qss = [m](const Vector& x) { return m.eval(x); };

  sys.flow_set_x = load_set(need(sysj, "flow_set_x"), sys.n1);
  sys.flow_set_z = load_set(need(sysj, "flow_set_z"), sys.n2);
  sys.jump_set_x = load_set(need(sysj, "jump_set_x"), sys.n1);
  sys.jump_set_z = load_set(need(sysj, "jump_set_z"), sys.n2);
  sys.flow_set = product_set(sys.flow_set_x, sys.n1, sys.flow_set_z, sys.n2);
  sys.jump_set = product_set(sys.jump_set_x, sys.n1, sys.jump_set_z, sys.n2);

  // --- certificate ---
  if (doc.contains("certificate")) {
    const json& certj = doc.at("certificate");
    CertificateBundle& cert = out.certificate;
    const json classes = certj.contains("classes") ? certj.at("classes") : json::object();
    const GradientMode mode =
        get_or(certj, "gradient_mode", std::string("analytic")) == "sampled"
            ? GradientMode::sampled
            : GradientMode::analytic;
    const bool smooth = certj.contains("smooth") ? certj.at("smooth").get<bool>() : false;

    cert.V = load_certificate_fn(certj, "V", slow_layout, mode, smooth);
    cert.W = load_certificate_fn(certj, "W", flow_layout, mode, smooth);
    cert.alpha1 = load_radial(certj, "alpha1", classes);
    cert.alpha2 = load_radial(certj, "alpha2", classes);
    cert.alpha3 = load_radial(certj, "alpha3", classes);
    cert.alpha4 = load_radial(certj, "alpha4", classes);
    cert.phi_x = load_spatial(certj, "phi_x", classes, slow_layout);
    cert.phi_z = load_radial(certj, "phi_z", classes);
    cert.rho_x = load_spatial(certj, "rho_x", classes, slow_layout);
    cert.rho_4 = load_spatial(certj, "rho_4", classes, slow_layout);
    cert.rho_z = load_radial(certj, "rho_z", classes);
    cert.rho_5 = load_radial(certj, "rho_5", classes);
    cert.rho_hat = load_spatial(certj, "rho_hat", classes, flow_layout);

    const json& ks = need(certj, "constants");
    cert.k_x = get_or(ks, "k_x", 0.0);
    cert.k_z = get_or(ks, "k_z", 0.0);
    cert.k_1 = get_or(ks, "k_1", 0.0);
    cert.k_2 = get_or(ks, "k_2", 0.0);
    cert.k_3 = get_or(ks, "k_3", 0.0);
    cert.k_4 = get_or(ks, "k_4", 0.0);
    cert.k_5 = get_or(ks, "k_5", 0.0);
    cert.c_x = get_or(ks, "c_x", 0.0);
    cert.c_z = get_or(ks, "c_z", 0.0);
    cert.mu_F = get_or(ks, "mu_F", 0.0);
    cert.mu_J = get_or(ks, "mu_J", 0.0);

    if (certj.contains("target_set")) cert.target_set = load_set(certj.at("target_set"), sys.n1);
    if (certj.contains("recurrence_set"))
      cert.recurrence_set = load_set(certj.at("recurrence_set"), sys.n1);
    cert.tilde_O_delta = get_or(certj, "tilde_O_delta", 0.1);
    if (certj.contains("A_is_closure_of_O"))
      cert.A_is_closure_of_O = certj.at("A_is_closure_of_O").get<bool>();
  }

  // --- execution ---
  {
    const json execj = doc.contains("execution") ? doc.at("execution") : json::object();
    ExecConfig& exec = out.execution;
    exec.flow.h_base = get_or(execj, "h_base", 0.01);
    exec.flow.fast_substep_factor = get_or(execj, "fast_substep_factor", 1);
    exec.flow.tol_event = get_or(execj, "tol_event", 1e-9);
    exec.flow.T_max = get_or(execj, "T_max", 5.0);
    exec.flow.selection = parse_selection_policy(execj, "selection_policy");
    exec.J_max = get_or(execj, "J_max", 10000);
    exec.T_total = get_or(execj, "T_total", 30.0);
    std::string ov = get_or(execj, "overlap_policy", std::string("prefer_jump"));
    if (ov == "prefer_jump")
      exec.overlap = OverlapPolicy::prefer_jump();
    else if (ov == "prefer_flow")
      exec.overlap = OverlapPolicy::prefer_flow();
    else if (ov == "bernoulli")
      exec.overlap = OverlapPolicy::bernoulli(get_or(execj, "overlap_p", 0.5));
    else
      bad("unknown overlap policy '" + ov + "'");
    exec.jump_selection = parse_selection_policy(execj, "jump_selection_policy");
    exec.validate();
  }

  // --- verification ---
  {
    const json verj = doc.contains("verification") ? doc.at("verification") : json::object();
    CheckOptions& ver = out.verification;
    Vector lo = verj.contains("box_lo") ? verj.at("box_lo").get<Vector>()
                                        : Vector(static_cast<std::size_t>(sys.n1 + sys.n2), -3.0);
    Vector hi = verj.contains("box_hi") ? verj.at("box_hi").get<Vector>()
                                        : Vector(static_cast<std::size_t>(sys.n1 + sys.n2), 3.0);
    if (static_cast<int>(lo.size()) != sys.n1 + sys.n2) bad("verification box has wrong dimension");
    ver.grid = GridSpec::uniform(lo, hi, get_or(verj, "points_per_dim", 101));
    ver.tol = get_or(verj, "tol", 1e-9);
    ver.n_mc = get_or(verj, "n_mc", 10000);
    ver.seed = static_cast<std::uint64_t>(get_or(verj, "seed", 0));
    ver.workers = get_or(verj, "workers", 0);
    ver.reduced.z_samples_per_x = get_or(verj, "z_samples_per_x", 4);
    ver.reduced.interior_combinations =
        verj.contains("interior_combinations") ? verj.at("interior_combinations").get<bool>() : true;
    ver.reduced.z_probe_box = {Vector(lo.begin() + sys.n1, lo.end()),
                               Vector(hi.begin() + sys.n1, hi.end())};
  }

  // --- montecarlo defaults ---
  {
    const json mcj = doc.contains("montecarlo") ? doc.at("montecarlo") : json::object();
    out.stability.delta = get_or(mcj, "delta", 0.25);
    out.stability.eps_ball = get_or(mcj, "eps_ball", 0.5);
    out.stability.T = get_or(mcj, "T", 20.0);
    out.stability.trials = get_or(mcj, "trials", 500);
    out.stability.confidence = get_or(mcj, "confidence", 0.95);
    out.stability.exec = out.execution;

    out.recurrence.O_slow = out.certificate.recurrence_set;
    out.recurrence.delta_O = get_or(mcj, "delta_O", 0.1);
    out.recurrence.R = get_or(mcj, "R", 5.0);
    out.recurrence.tau = get_or(mcj, "tau", 10.0);
    out.recurrence.trials = get_or(mcj, "recur_trials", 1000);
    out.recurrence.confidence = out.stability.confidence;
    out.recurrence.exec = out.execution;
  }
  return out;
}

LoadedProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  return load_problem(doc);
}

}  // namespace sphds
