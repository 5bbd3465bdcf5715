#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "sphds/config.hpp"
#include "sphds/models.hpp"
#include "sphds/montecarlo.hpp"

namespace fs = std::filesystem;
using namespace sphds;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitBadInitial = 3;
constexpr int kExitMissingCertificate = 4;

struct CommonFlags {
  std::string config;
  std::string out = "out";
  double epsilon = -1.0;  // negative: use the problem default
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  int grid_points = 0;
  double tol = -1.0;
  int trials = -1;
  // flow options; negatives mean "keep the config value"
  double h_base = -1.0;
  int fast_substep_factor = -1;
  double tol_event = -1.0;
  double t_max = -1.0;
  std::string selection_policy;
};

std::uint64_t resolve_seed(const CommonFlags& flags) {
  if (flags.seed_set) return flags.seed;
  if (const char* env = std::getenv("TOOLKIT_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

// --config accepts a file path or a built-in example name.
LoadedProblem resolve_problem(const std::string& config) {
  if (fs::exists(config)) return load_problem_file(config);
  for (const auto& name : example_names())
    if (name == config) return make_example(name).problem;
  throw std::invalid_argument("config: no file or built-in example named '" + config + "'");
}

void apply_overrides(LoadedProblem& prob, const CommonFlags& flags) {
  if (flags.grid_points > 0)
    prob.verification.grid =
        GridSpec::uniform(prob.verification.grid.lo, prob.verification.grid.hi, flags.grid_points);
  if (flags.tol >= 0.0) prob.verification.tol = flags.tol;
  prob.verification.workers = flags.workers;
  prob.verification.seed = resolve_seed(flags);
  if (flags.trials == 0) throw std::invalid_argument("config: trial count must be at least 1");
  if (flags.trials > 0) {
    prob.stability.trials = flags.trials;
    prob.recurrence.trials = flags.trials;
  }
  prob.stability.workers = flags.workers;
  prob.recurrence.workers = flags.workers;

  FlowOptions& fo = prob.execution.flow;
  if (flags.h_base > 0.0) fo.h_base = flags.h_base;
  if (flags.fast_substep_factor > 0) fo.fast_substep_factor = flags.fast_substep_factor;
  if (flags.tol_event > 0.0) fo.tol_event = flags.tol_event;
  if (flags.t_max > 0.0) fo.T_max = flags.t_max;
  if (!flags.selection_policy.empty()) {
    if (flags.selection_policy == "first")
      fo.selection = SelectionPolicy::first();
    else if (flags.selection_policy == "random")
      fo.selection = SelectionPolicy::random();
    else if (flags.selection_policy.rfind("index:", 0) == 0)
      fo.selection = SelectionPolicy::at(std::stoi(flags.selection_policy.substr(6)));
    else
      throw std::invalid_argument("config: unknown selection policy '" + flags.selection_policy +
                                  "'");
  }
  prob.stability.exec = prob.execution;
  prob.recurrence.exec = prob.execution;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
}

// The manifest is written before any computation so a run can be
// reproduced from its output directory alone.
void write_manifest(const fs::path& dir, const std::string& command, const std::string& config,
                    const json& params, std::uint64_t seed) {
  json doc;
  doc["command"] = command;
  doc["config"] = config;
  doc["parameters"] = params;
  doc["master_seed"] = seed;
  doc["output_directory"] = dir.string();
  doc["toolkit_version"] = kToolkitVersion;
  fs::create_directories(dir);
  write_file(dir / "manifest.json", doc.dump(2) + "\n");
}

Vector parse_vector(const std::string& csv) {
  Vector out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<std::string> missing_certificate_fields(const CertificateBundle& cert,
                                                    TheoremId theorem) {
  std::vector<std::string> missing;
  auto need_fn = [&missing](const DifferentiableFn& f, const char* name) {
    if (!f.defined()) missing.push_back(name);
  };
  auto need_cmp = [&missing](const ComparisonFunction& f, const char* name) {
    if (!f.defined()) missing.push_back(name);
  };
  need_fn(cert.V, "V");
  need_fn(cert.W, "W");
  need_cmp(cert.alpha1, "alpha1");
  need_cmp(cert.alpha2, "alpha2");
  need_cmp(cert.alpha3, "alpha3");
  need_cmp(cert.alpha4, "alpha4");
  need_cmp(cert.phi_x, "phi_x");
  need_cmp(cert.phi_z, "phi_z");
  if (!cert.target_set.member) missing.push_back("target_set");
  if (theorem == TheoremId::T1 || theorem == TheoremId::T3) need_cmp(cert.rho_hat, "rho_hat");
  if (theorem == TheoremId::T3 || theorem == TheoremId::T4) {
    if (!cert.recurrence_set.member) missing.push_back("recurrence_set");
  }
  return missing;
}

// The relaxed statements need the level-set drift screen as an input.
std::optional<bool> run_level_screen(const LoadedProblem& prob, double epsilon, TheoremId theorem,
                                     std::uint64_t seed) {
  if (theorem != TheoremId::T2 && theorem != TheoremId::T4) return std::nullopt;
  const auto& cert = prob.certificate;
  auto th = compute_thresholds(cert.k_x, cert.k_z, cert.k_1, cert.k_2, cert.k_3);
  auto E = compose_foster(cert, th.theta_star, prob.system.n1);
  LevelSetConfig cfg;
  cfg.c_grid = {0.5, 1.0};
  cfg.probe_lo = prob.verification.grid.lo;
  cfg.probe_hi = prob.verification.grid.hi;
  cfg.exec = prob.execution;
  cfg.workers = prob.verification.workers;
  if (theorem == TheoremId::T4) {
    const SystemDefinition& sys = prob.system;
    SetPredicate lifted;
    double delta = cert.tilde_O_delta;
    auto O = cert.recurrence_set;
    lifted.member = [&sys, O, delta](const Vector& y) {
      auto s = sys.split(y);
      if (!O.member(s.x)) return false;
      Vector m = sys.qss_point(s.x);
      Vector diff(s.z.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s.z[i] - m[i];
      return norm(diff) < delta;
    };
    cfg.exclude = lifted;
  }
  try {
    auto rep = check_level_set_nonstationarity(prob.system, E, cfg, epsilon,
                                               mix64(seed ^ 0x1e5e15e7));
    return !rep.any_stationary;
  } catch (const std::exception&) {
    return std::nullopt;  // screen inconclusive; the checklist reports not_checked
  }
}

void print_checklist(const TheoremChecklist& cl) {
  std::cout << "theorem " << to_string(cl.theorem) << "  epsilon=" << cl.epsilon
            << "  epsilon*=" << cl.thresholds.epsilon_star
            << "  theta*=" << cl.thresholds.theta_star << "\n";
  for (const auto& e : cl.entries) {
    std::string status = to_string(e.status);
    status.resize(12, ' ');
    std::cout << "  " << status << (e.required ? "  " : " ~") << e.name;
    if (!e.detail.empty()) std::cout << "  (" << e.detail << ")";
    std::cout << "\n";
  }
  std::cout << "overall: " << (cl.overall ? "PASS" : "FAIL") << "\n";
}

int cmd_examples(const std::string& out_dir, const std::string& only) {
  for (const auto& name : example_names()) {
    if (!only.empty() && only != name) continue;
    auto ex = make_example(name);
    std::string targets;
    for (const auto& [id, pass] : ex.expected)
      if (pass) targets += std::string(targets.empty() ? "" : ",") + to_string(id);
    std::cout << name << ": targets " << (targets.empty() ? "none" : targets)
              << ", default epsilon " << ex.default_epsilon << "\n";
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      fs::path path = fs::path(out_dir) / (name + ".json");
      write_file(path, ex.config.dump(2) + "\n");
      std::cout << "  wrote " << path.string() << "\n";
    }
  }
  return kExitPass;
}

int cmd_simulate(const CommonFlags& flags, const std::string& y0_csv) {
  auto prob = resolve_problem(flags.config);
  apply_overrides(prob, flags);
  const double epsilon = flags.epsilon > 0.0 ? flags.epsilon : prob.default_epsilon;
  const std::uint64_t seed = resolve_seed(flags);
  Vector y0 = parse_vector(y0_csv);
  if (static_cast<int>(y0.size()) != prob.system.n1 + prob.system.n2)
    throw std::invalid_argument("config: y0 has the wrong dimension");

  fs::path dir(flags.out);
  write_manifest(dir, "simulate", flags.config,
                 {{"epsilon", epsilon}, {"y0", y0}, {"T_total", prob.execution.T_total}}, seed);

  RandomSolutionRecord rec;
  try {
    rec = solve(prob.system, y0, epsilon, prob.execution, seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInitial;
  }
  write_file(dir / "trajectory.csv", rec.to_csv());
  write_file(dir / "record.json", rec.to_json().dump(2) + "\n");
  std::cout << "stop_reason=" << to_string(rec.stop_reason) << " jumps=" << rec.inputs.size()
            << " end_total_time=" << rec.arc.end_total_time() << "\n";
  std::cout << "wrote " << (dir / "trajectory.csv").string() << "\n";
  return kExitPass;
}

int cmd_verify(const CommonFlags& flags, const std::string& theorem_name) {
  auto prob = resolve_problem(flags.config);
  apply_overrides(prob, flags);
  auto theorem = theorem_from_string(theorem_name);
  if (!theorem) throw std::invalid_argument("config: unknown theorem '" + theorem_name + "'");
  const double epsilon = flags.epsilon > 0.0 ? flags.epsilon : prob.default_epsilon;
  const std::uint64_t seed = resolve_seed(flags);

  auto missing = missing_certificate_fields(prob.certificate, *theorem);
  if (!missing.empty()) {
    std::cerr << "error: certificate missing required fields:";
    for (const auto& m : missing) std::cerr << " " << m;
    std::cerr << "\n";
    return kExitMissingCertificate;
  }

  fs::path dir(flags.out);
  write_manifest(dir, "verify", flags.config,
                 {{"theorem", to_string(*theorem)},
                  {"epsilon", epsilon},
                  {"grid_points", prob.verification.grid.counts},
                  {"tol", prob.verification.tol}},
                 seed);

  TheoremOptions opts;
  opts.checks = prob.verification;
  opts.level_set_nonstationary = run_level_screen(prob, epsilon, *theorem, seed);
  auto cl = evaluate_theorem(prob.system, prob.certificate, epsilon, *theorem, opts);

  json violations = json::array();
  for (const auto& r : cl.reports) violations.push_back(r.to_json());
  write_file(dir / "checklist.json", cl.to_json().dump(2) + "\n");
  write_file(dir / "violations.json", violations.dump(2) + "\n");
  print_checklist(cl);
  return cl.overall ? kExitPass : kExitFail;
}

int cmd_sweep(const CommonFlags& flags, const std::string& theorem_name,
              const std::string& eps_csv) {
  auto prob = resolve_problem(flags.config);
  apply_overrides(prob, flags);
  auto theorem = theorem_from_string(theorem_name);
  if (!theorem) throw std::invalid_argument("config: unknown theorem '" + theorem_name + "'");
  Vector epsilons = parse_vector(eps_csv);
  const std::uint64_t seed = resolve_seed(flags);

  fs::path dir(flags.out);
  write_manifest(dir, "sweep", flags.config,
                 {{"theorem", to_string(*theorem)}, {"epsilons", epsilons}}, seed);

  TheoremOptions opts;
  opts.checks = prob.verification;
  if (!epsilons.empty())
    opts.level_set_nonstationary = run_level_screen(prob, epsilons.front(), *theorem, seed);

  auto rows = sweep_epsilon(prob.system, prob.certificate, epsilons, *theorem, opts,
                            prob.stability, prob.recurrence, seed);
  std::ostringstream csv;
  csv.precision(17);
  csv << "epsilon,checklist,point_estimate,lower_bound\n";
  json summary = json::array();
  std::cout << "epsilon  checklist  estimate  lower_bound\n";
  for (const auto& row : rows) {
    csv << row.epsilon << "," << (row.checklist_pass ? "pass" : "fail") << ","
        << row.estimate.point_estimate << "," << row.estimate.lower_bound << "\n";
    summary.push_back({{"epsilon", row.epsilon},
                       {"checklist", row.checklist.to_json()},
                       {"estimate", row.estimate.to_json()}});
    std::cout << row.epsilon << "  " << (row.checklist_pass ? "pass" : "FAIL") << "  "
              << row.estimate.point_estimate << "  " << row.estimate.lower_bound << "\n";
  }
  write_file(dir / "sweep.csv", csv.str());
  write_file(dir / "sweep.json", summary.dump(2) + "\n");
  return kExitPass;
}

int cmd_recur(const CommonFlags& flags, double tau, double radius, double delta_o) {
  auto prob = resolve_problem(flags.config);
  apply_overrides(prob, flags);
  const double epsilon = flags.epsilon > 0.0 ? flags.epsilon : prob.default_epsilon;
  const std::uint64_t seed = resolve_seed(flags);
  RecurrenceConfig cfg = prob.recurrence;
  if (tau >= 0.0) cfg.tau = tau;
  if (radius > 0.0) cfg.R = radius;
  if (delta_o > 0.0) cfg.delta_O = delta_o;
  if (!cfg.O_slow.member)
    throw std::invalid_argument("config: recurrence needs a recurrence_set in the certificate");

  fs::path dir(flags.out);
  write_manifest(dir, "recur", flags.config,
                 {{"epsilon", epsilon},
                  {"tau", cfg.tau},
                  {"R", cfg.R},
                  {"delta_O", cfg.delta_O},
                  {"trials", cfg.trials}},
                 seed);

  std::vector<TrialOutcome> rows;
  auto result = estimate_recurrence(prob.system, cfg, epsilon, seed, &rows);
  write_file(dir / "trials.csv", trials_to_csv(rows));
  json doc = result.estimate.to_json();
  doc["finite_escape_candidates"] = result.finite_escape_candidates;
  doc["delta_O"] = result.delta_O;
  doc["note"] = "target probed through its fast-block inflation";
  write_file(dir / "recurrence.json", doc.dump(2) + "\n");
  std::cout << "successes " << result.estimate.n_success << "/" << result.estimate.n_trials
            << "  estimate=" << result.estimate.point_estimate
            << "  lower_bound=" << result.estimate.lower_bound
            << "  finite_escape_candidates=" << result.finite_escape_candidates << "\n";
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and certificate screening for two-time-scale stochastic hybrid systems"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string y0_csv = "0,0";
  std::string theorem = "T1";
  std::string eps_csv;
  std::string only_example;
  std::string examples_out;
  double tau = -1.0, radius = -1.0, delta_o = -1.0;

  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "config file or built-in example name")->required();
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--epsilon", flags.epsilon, "time-scale parameter");
    cmd->add_option("--seed", flags.seed, "master seed (default 0; TOOLKIT_SEED overrides)")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--workers", flags.workers, "worker threads (0 = all)");
    cmd->add_option("--grid", flags.grid_points, "verification grid points per dimension");
    cmd->add_option("--tol", flags.tol, "verification tolerance");
    cmd->add_option("--trials", flags.trials, "ensemble trial count");
    cmd->add_option("--h-base", flags.h_base, "integrator base step");
    cmd->add_option("--fast-substep-factor", flags.fast_substep_factor,
                    "substeps per base step for the fast scale");
    cmd->add_option("--tol-event", flags.tol_event, "event localization tolerance");
    cmd->add_option("--t-max", flags.t_max, "max flow time per segment");
    cmd->add_option("--selection-policy", flags.selection_policy,
                    "first | random | index:<k>");
  };

  auto* sim = app.add_subcommand("simulate", "integrate one random solution");
  add_common(sim);
  sim->add_option("--y0", y0_csv, "initial state, comma separated");

  auto* ver = app.add_subcommand("verify", "run the certificate screens and a theorem checklist");
  add_common(ver);
  ver->add_option("--theorem", theorem, "T1 | T2 | T3 | T4");

  auto* swp = app.add_subcommand("sweep", "checklist + empirical estimate over an epsilon grid");
  add_common(swp);
  swp->add_option("--theorem", theorem, "T1 | T2 | T3 | T4");
  swp->add_option("--epsilons", eps_csv, "comma-separated epsilon grid")->required();

  auto* rec = app.add_subcommand("recur", "empirical recurrence estimate");
  add_common(rec);
  rec->add_option("--tau", tau, "hitting horizon on t + j");
  rec->add_option("--radius", radius, "initial-condition ball radius");
  rec->add_option("--delta-o", delta_o, "fast-block inflation of the target");

  auto* exs = app.add_subcommand("examples", "list built-in examples; --out emits their configs");
  exs->add_option("--out", examples_out, "directory for emitted configs");
  exs->add_option("--name", only_example, "emit only this example");

  CLI11_PARSE(app, argc, argv);

  try {
    if (exs->parsed()) return cmd_examples(examples_out, only_example);
    if (sim->parsed()) return cmd_simulate(flags, y0_csv);
    if (ver->parsed()) return cmd_verify(flags, theorem);
    if (swp->parsed()) return cmd_sweep(flags, theorem, eps_csv);
    if (rec->parsed()) return cmd_recur(flags, tau, radius, delta_o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  return kExitBadConfig;
}
