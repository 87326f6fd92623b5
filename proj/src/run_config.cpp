#include "grlforge/run_config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "grlforge/errors.hpp"

namespace grlforge::cli {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void read_synth(const json& j, synth::SynthConfig& s) {
  read_field(j, "size", s.size);
  read_field(j, "forged_fraction", s.forged_fraction);
  read_field(j, "height", s.height);
  read_field(j, "width", s.width);
  read_field(j, "channels", s.channels);
  read_field(j, "copy_move_prob", s.copy_move_prob);
  read_field(j, "rotation_min", s.rotation_min);
  read_field(j, "rotation_max", s.rotation_max);
  read_field(j, "scale_min", s.scale_min);
  read_field(j, "scale_max", s.scale_max);
  read_field(j, "resize_min", s.resize_min);
  read_field(j, "resize_max", s.resize_max);
  read_field(j, "blur_min", s.blur_min);
  read_field(j, "blur_max", s.blur_max);
  read_field(j, "region_min", s.region_min);
  read_field(j, "region_max", s.region_max);
  read_field(j, "min_separation", s.min_separation);
  read_field(j, "brightness_offset", s.brightness_offset);
  read_field(j, "domain", s.domain);
  read_field(j, "seed", s.seed);
  read_field(j, "inpaint_tol", s.inpaint_tol);
  read_field(j, "inpaint_max_iters", s.inpaint_max_iters);
}

void read_train(const json& j, nn::TrainConfig& t) {
  read_field(j, "lr", t.lr);
  read_field(j, "momentum", t.momentum);
  read_field(j, "batch_size", t.batch_size);
  read_field(j, "epochs", t.epochs);
  read_field(j, "seed", t.seed);
}

void read_grl(const json& j, dann::GrlConfig& g) {
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "constant")
      g.mode = dann::GrlConfig::Mode::constant;
    else if (mode == "annealed")
      g.mode = dann::GrlConfig::Mode::annealed;
    else
      throw ConfigError("config field 'grl.mode' must be 'constant' or 'annealed'");
  }
  read_field(j, "lambda0", g.lambda0);
  read_field(j, "gamma", g.gamma);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
  if (!j.contains("schema") || !j["schema"].is_number_integer() ||
      j["schema"].get<int>() != 1)
    throw ConfigError("config file '" + path + "' needs \"schema\": 1");

  RunConfig config;
  read_field(j, "run_id", config.run_id);
  read_field(j, "out_dir", config.out_dir);
  if (j.contains("synth")) read_synth(j["synth"], config.synth);
  if (j.contains("train")) read_train(j["train"], config.train);
  if (j.contains("grl")) read_grl(j["grl"], config.grl);
  if (j.contains("model")) {
    const json& m = j["model"];
    read_field(m, "backbone", config.backbone);
    read_field(m, "feature_dim", config.feature_dim);
    read_field(m, "domain_hidden", config.domain_hidden);
  }
  if (j.contains("data")) {
    const json& d = j["data"];
    read_field(d, "source_manifest", config.source_manifest);
    read_field(d, "target_manifest", config.target_manifest);
    read_field(d, "eval_manifest", config.eval_manifest);
    read_field(d, "eval_split", config.eval_split);
    read_field(d, "checkpoint", config.checkpoint);
    read_field(d, "val_fraction", config.val_fraction);
    read_field(d, "train_mode", config.train_mode);
  }
  if (j.contains("gradcheck")) read_field(j["gradcheck"], "inject_fault",
                                          config.gradcheck_inject_fault);
  if (j.contains("toy")) {
    const json& t = j["toy"];
    read_field(t, "corpus_size", config.toy.corpus_size);
    read_field(t, "epochs", config.toy.epochs);
    read_field(t, "batch_size", config.toy.batch_size);
    read_field(t, "seeds", config.toy.seeds);
  }
  return config;
}

void apply_overrides(RunConfig& config, const FlagOverrides& flags) {
  if (flags.seed) {
    config.train.seed = *flags.seed;
    config.synth.seed = *flags.seed;
  }
  if (flags.out_dir) config.out_dir = *flags.out_dir;
  if (flags.lambda) {
    config.grl.mode = dann::GrlConfig::Mode::constant;
    config.grl.lambda0 = *flags.lambda;
  }
  if (flags.epochs) config.train.epochs = *flags.epochs;
  if (flags.backbone) config.backbone = *flags.backbone;
}

}  // namespace grlforge::cli
