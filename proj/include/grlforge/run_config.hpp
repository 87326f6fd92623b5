#pragma once

#include <optional>
#include <string>

#include "grlforge/dann.hpp"
#include "grlforge/nn.hpp"
#include "grlforge/synth.hpp"

namespace grlforge::cli {

// Everything a command needs, merged from defaults, an optional JSON config
// file (versioned "schema" field), and command-line flag overrides, in that
// precedence order.
struct RunConfig {
  std::string run_id = "run";
  std::string out_dir = "out";

  synth::SynthConfig synth;
  nn::TrainConfig train;
  dann::GrlConfig grl;

  std::string backbone = "small-cnn";
  std::size_t feature_dim = 64;
  std::size_t domain_hidden = 16;

  std::string source_manifest;
  std::string target_manifest;
  std::string eval_manifest;
  std::string eval_split;  // optional split file; evaluation uses its test side
  std::string checkpoint;
  double val_fraction = 0.2;
  std::string train_mode = "dann";  // "dann" | "source-only"

  bool gradcheck_inject_fault = false;  // test hook: +1e-3 on analytic grads

  // reproduce-toy protocol; defaults are the published experiment, smaller
  // values give smoke-test runs
  struct ToyProtocol {
    std::size_t corpus_size = 1000;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::size_t seeds = 5;
  };
  ToyProtocol toy;
};

// Flag values carried from the command line; unset fields leave the config
// file's (or default) values in place.
struct FlagOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::optional<std::string> backbone;
};

RunConfig load_run_config(const std::string& path);
void apply_overrides(RunConfig& config, const FlagOverrides& flags);

}  // namespace grlforge::cli
