#pragma once

#include <iosfwd>
#include <vector>

#include "grlforge/run_config.hpp"

namespace grlforge::cli {

// Stable exit-code contract shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;
inline constexpr int kExitDivergence = 4;

int cmd_synth(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_gradcheck(const RunConfig& config);
int cmd_reproduce_toy(const RunConfig& config);

// The toy transfer experiment behind reproduce-toy, callable in-process so
// the acceptance suite can assert on the exact numbers it reports.
struct ToyRun {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double target_f1 = 0.0;
  double source_val_f1 = 0.0;
  double domain_accuracy = 0.0;
};

struct ToyOutcome {
  std::vector<ToyRun> runs;
  double dann_target_f1 = 0.0;  // medians over seeds
  double baseline_target_f1 = 0.0;
  double dann_source_f1 = 0.0;
  double baseline_source_f1 = 0.0;
  double dann_domain_accuracy = 0.0;
  double baseline_domain_accuracy = 0.0;
  double elapsed_seconds = 0.0;
  bool transfer_margin_ok = false;    // dann target F1 >= baseline + 0.03
  bool source_floor_ok = false;       // both source-val F1 medians >= 0.85
  bool domain_confusion_ok = false;   // dann domain accuracy strictly lower
};

ToyOutcome run_toy_experiment(const RunConfig& config, std::ostream& log);

}  // namespace grlforge::cli
