#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "grlforge/commands.hpp"
#include "grlforge/errors.hpp"
#include "grlforge/run_config.hpp"

namespace cli = grlforge::cli;

namespace {

struct CommonFlags {
  std::string config_path;
  cli::FlagOverrides overrides;
};

// --config plus the flag overrides shared by every subcommand.
void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration (schema 1)");
  cmd->add_option("--seed", [&flags](const CLI::results_t& res) {
    flags.overrides.seed = std::stoull(res[0]);
    return true;
  }, "Master seed override (u64)");
  cmd->add_option("--out", [&flags](const CLI::results_t& res) {
    flags.overrides.out_dir = res[0];
    return true;
  }, "Output directory override");
  cmd->add_option("--lambda", [&flags](const CLI::results_t& res) {
    flags.overrides.lambda = std::stod(res[0]);
    return true;
  }, "Constant reversal strength override (sets grl mode to constant)");
  cmd->add_option("--epochs", [&flags](const CLI::results_t& res) {
    flags.overrides.epochs = std::stoull(res[0]);
    return true;
  }, "Epoch count override");
  cmd->add_option("--backbone", [&flags](const CLI::results_t& res) {
    flags.overrides.backbone = res[0];
    return true;
  }, "Backbone preset override (small-cnn | mlp)");
}

cli::RunConfig resolve_config(const CommonFlags& flags) {
  cli::RunConfig config;
  if (!flags.config_path.empty()) config = cli::load_run_config(flags.config_path);
  cli::apply_overrides(config, flags.overrides);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"copy-move forgery corpus synthesis and domain-adversarial training"};
  app.require_subcommand(1);

  CommonFlags synth_flags, train_flags, eval_flags, gradcheck_flags, toy_flags;
  CLI::App* synth = app.add_subcommand("synth", "Synthesize a labeled forgery corpus");
  CLI::App* train = app.add_subcommand("train", "Train the two-head classifier");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled manifest");
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Finite-difference self-check of every gradient path");
  CLI::App* toy = app.add_subcommand(
      "reproduce-toy", "Run the scaled-down transfer experiment end to end");
  add_common_flags(synth, synth_flags);
  add_common_flags(train, train_flags);
  add_common_flags(eval, eval_flags);
  add_common_flags(gradcheck, gradcheck_flags);
  add_common_flags(toy, toy_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return cli::kExitConfigError;
  }

  try {
    if (synth->parsed()) return cli::cmd_synth(resolve_config(synth_flags));
    if (train->parsed()) return cli::cmd_train(resolve_config(train_flags));
    if (eval->parsed()) return cli::cmd_eval(resolve_config(eval_flags));
    if (gradcheck->parsed()) return cli::cmd_gradcheck(resolve_config(gradcheck_flags));
    if (toy->parsed()) return cli::cmd_reproduce_toy(resolve_config(toy_flags));
  } catch (const grlforge::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return cli::kExitIoError;
  } catch (const grlforge::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitConfigError;
  }
  return cli::kExitConfigError;
}
