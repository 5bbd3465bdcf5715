// Compares the serial reference kernels against the OpenMP versions on the
// two data-parallel workloads: grid inequality screens and trial ensembles.
// The outputs must match bit for bit; the table reports wall time and the
// speedup of the parallel kernel.

#include <chrono>
#include <cstdio>
#include <string>

#include "sphds/grid.hpp"
#include "sphds/models.hpp"
#include "sphds/montecarlo.hpp"

using namespace sphds;

namespace {

double seconds(const std::function<void()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", name, serial, parallel, serial / parallel,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int workers = hardware_workers();
  if (argc > 1) workers = std::stoi(argv[1]);
  std::printf("workers for the parallel kernels: %d\n\n", workers);
  std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

  {
    auto ex = make_example("linear-tracker");
    CheckOptions opts = ex.problem.verification;
    opts.grid = GridSpec::uniform({-3.0, -3.0}, {3.0, 3.0}, 301);
    ViolationReport serial_rep, parallel_rep;
    opts.workers = 1;
    double ts = seconds([&] {
      serial_rep = check_flow_inequality(CheckId::A6b, ex.problem.system, ex.problem.certificate,
                                         opts);
    });
    opts.workers = workers;
    double tp = seconds([&] {
      parallel_rep = check_flow_inequality(CheckId::A6b, ex.problem.system, ex.problem.certificate,
                                           opts);
    });
    row("grid screen (A6b, 301x301)", ts, tp,
        serial_rep.to_json().dump() == parallel_rep.to_json().dump());
  }

  {
    auto ex = make_example("noisy-reset");
    RecurrenceConfig cfg = ex.problem.recurrence;
    cfg.trials = 200;
    std::string serial_csv, parallel_csv;
    cfg.workers = 1;
    double ts = seconds([&] {
      std::vector<TrialOutcome> rows_out;
      auto r = estimate_recurrence(ex.problem.system, cfg, 0.05, 7, &rows_out);
      serial_csv = trials_to_csv(rows_out) + r.estimate.to_json().dump();
    });
    cfg.workers = workers;
    double tp = seconds([&] {
      std::vector<TrialOutcome> rows_out;
      auto r = estimate_recurrence(ex.problem.system, cfg, 0.05, 7, &rows_out);
      parallel_csv = trials_to_csv(rows_out) + r.estimate.to_json().dump();
    });
    row("recurrence ensemble (200)", ts, tp, serial_csv == parallel_csv);
  }

  {
    auto ex = make_example("linear-tracker");
    StabilityProbeConfig cfg;
    cfg.exec = ex.problem.execution;
    cfg.trials = 100;
    std::string serial_out, parallel_out;
    cfg.workers = 1;
    double ts = seconds([&] {
      serial_out = estimate_stability_in_probability(ex.problem.system, ex.problem.certificate,
                                                     0.1, cfg, 3)
                       .to_json()
                       .dump();
    });
    cfg.workers = workers;
    double tp = seconds([&] {
      parallel_out = estimate_stability_in_probability(ex.problem.system, ex.problem.certificate,
                                                       0.1, cfg, 3)
                         .to_json()
                         .dump();
    });
    row("stability ensemble (100)", ts, tp, serial_out == parallel_out);
  }
  return 0;
}
