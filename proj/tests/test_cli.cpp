#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "grlforge/checkpoint.hpp"
#include "grlforge/nn.hpp"
#include "test_utils.hpp"

namespace fs = std::filesystem;
using namespace grlforge;

namespace {

struct CmdResult {
  int code = -1;
  std::string output;
};

fs::path case_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "grlforge_cli" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(bool(in), "cannot open " << path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(bool(out));
  out << text;
}

// Runs the CLI with `cwd` as working directory and captures combined output.
CmdResult run_cli(const fs::path& cwd, const std::string& args) {
  const fs::path log = cwd / "cli_output.log";
  const std::string cmd = "cd '" + cwd.string() + "' && '" + GRLFORGE_CLI_PATH + "' " + args +
                          " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  CmdResult result;
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = slurp(log);
  return result;
}

// A small corpus that synthesizes quickly: identity transforms, 12x12 images.
std::string synth_json(const std::string& out_dir, std::uint64_t seed) {
  std::ostringstream j;
  j << "{\n"
    << "  \"schema\": 1,\n"
    << "  \"out_dir\": \"" << out_dir << "\",\n"
    << "  \"synth\": {\n"
    << "    \"size\": 10, \"height\": 12, \"width\": 12, \"channels\": 3,\n"
    << "    \"copy_move_prob\": 1.0,\n"
    << "    \"rotation_min\": 0.0, \"rotation_max\": 0.0,\n"
    << "    \"blur_min\": 0.0, \"blur_max\": 0.0,\n"
    << "    \"region_min\": 4, \"region_max\": 5, \"min_separation\": 2,\n"
    << "    \"seed\": " << seed << "\n"
    << "  }\n"
    << "}\n";
  return j.str();
}

// Writes the config, runs synth, and returns the manifest path relative to dir.
std::string make_corpus(const fs::path& dir, const std::string& sub, std::uint64_t seed) {
  write_text(dir / (sub + "_synth.json"), synth_json(sub, seed));
  const CmdResult r = run_cli(dir, "synth --config " + sub + "_synth.json");
  REQUIRE_MESSAGE(r.code == 0, r.output);
  return sub + "/manifest.jsonl";
}

std::string train_json(const std::string& source, const std::string& target,
                       const std::string& out_dir, double lr, std::size_t epochs,
                       const std::string& mode) {
  std::ostringstream j;
  j << "{\n"
    << "  \"schema\": 1,\n"
    << "  \"run_id\": \"clitest\",\n"
    << "  \"out_dir\": \"" << out_dir << "\",\n"
    << "  \"train\": {\"lr\": " << lr
    << ", \"momentum\": 0.9, \"batch_size\": 8, \"epochs\": " << epochs << ", \"seed\": 5},\n"
    << "  \"model\": {\"feature_dim\": 8, \"domain_hidden\": 4},\n"
    << "  \"grl\": {\"mode\": \"constant\", \"lambda0\": 1.0},\n"
    << "  \"data\": {\n"
    << "    \"source_manifest\": \"" << source << "\",\n";
  if (!target.empty()) j << "    \"target_manifest\": \"" << target << "\",\n";
  j << "    \"val_fraction\": 0.2,\n"
    << "    \"train_mode\": \"" << mode << "\"\n"
    << "  }\n"
    << "}\n";
  return j.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool params_bit_equal(const nn::ParamSet& a, const nn::ParamSet& b) {
  if (a.count() != b.count()) return false;
  for (std::size_t i = 0; i < a.count(); ++i)
    if (a[i].name != b[i].name || !testutil::bit_equal(a[i].value, b[i].value)) return false;
  return true;
}

}  // namespace

TEST_CASE("synth writes a corpus whose rerun is byte-identical") {
  const fs::path dir = case_dir("synth");
  write_text(dir / "synth.json", synth_json("a", 9));

  const CmdResult first = run_cli(dir, "synth --config synth.json");
  REQUIRE_MESSAGE(first.code == 0, first.output);
  CHECK(first.output.find("5 forged / 5 authentic") != std::string::npos);
  REQUIRE(fs::exists(dir / "a" / "manifest.jsonl"));

  const std::string manifest = slurp(dir / "a" / "manifest.jsonl");
  CHECK(lines_of(manifest).size() == 10);

  std::size_t images = 0, masks = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("img_", 0) == 0) ++images;
    if (name.rfind("msk_", 0) == 0) ++masks;
  }
  CHECK(images == 10);
  CHECK(masks == 5);

  const CmdResult second = run_cli(dir, "synth --config synth.json --out b");
  REQUIRE_MESSAGE(second.code == 0, second.output);
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const fs::path twin = dir / "b" / entry.path().filename();
    REQUIRE_MESSAGE(fs::exists(twin), twin.string() << " missing from rerun");
    CHECK_MESSAGE(slurp(entry.path()) == slurp(twin),
                  entry.path().filename().string() << " differs between reruns");
  }
}

TEST_CASE("train writes split, checkpoint, and per-epoch metrics deterministically") {
  const fs::path dir = case_dir("train");
  const std::string manifest = make_corpus(dir, "corpus", 9);
  write_text(dir / "train.json", train_json(manifest, manifest, "run", 0.005, 2, "dann"));

  const CmdResult r = run_cli(dir, "train --config train.json");
  REQUIRE_MESSAGE(r.code == 0, r.output);
  CHECK(r.output.find("source-val F1") != std::string::npos);
  REQUIRE(fs::exists(dir / "run" / "split.json"));
  REQUIRE(fs::exists(dir / "run" / "model.grlf"));
  REQUIRE(fs::exists(dir / "run" / "metrics.csv"));

  const std::vector<std::string> rows = lines_of(slurp(dir / "run" / "metrics.csv"));
  REQUIRE(rows.size() == 3);  // header plus one row per epoch
  CHECK(rows[0] ==
        "run_id,epoch,lambda,tp,fp,tn,fn,precision,recall,f1,accuracy,domain_accuracy");
  CHECK(split_csv(rows[1])[0] == "clitest");
  CHECK(split_csv(rows[1])[1] == "0");
  CHECK(split_csv(rows[2])[1] == "1");

  const CmdResult again = run_cli(dir, "train --config train.json --out run2");
  REQUIRE_MESSAGE(again.code == 0, again.output);
  CHECK(slurp(dir / "run" / "model.grlf") == slurp(dir / "run2" / "model.grlf"));
  CHECK(slurp(dir / "run" / "metrics.csv") == slurp(dir / "run2" / "metrics.csv"));
}

TEST_CASE("a lambda-zero run trains the shared trunk exactly like source-only") {
  const fs::path dir = case_dir("lambda_zero");
  const std::string manifest = make_corpus(dir, "corpus", 21);

  write_text(dir / "adv.json", train_json(manifest, manifest, "adv", 0.005, 2, "dann"));
  write_text(dir / "plain.json", train_json(manifest, "", "plain", 0.005, 2, "source-only"));

  const CmdResult adv = run_cli(dir, "train --config adv.json --lambda 0");
  REQUIRE_MESSAGE(adv.code == 0, adv.output);
  const CmdResult plain = run_cli(dir, "train --config plain.json");
  REQUIRE_MESSAGE(plain.code == 0, plain.output);

  const io::Checkpoint a = io::load_checkpoint((dir / "adv" / "model.grlf").string());
  const io::Checkpoint p = io::load_checkpoint((dir / "plain" / "model.grlf").string());
  CHECK(params_bit_equal(a.model.feature.params(), p.model.feature.params()));
  CHECK(params_bit_equal(a.model.source_head.params(), p.model.source_head.params()));
  // the adversarial run still trains its domain head, the plain run never does
  CHECK_FALSE(params_bit_equal(a.model.domain_head.params(), p.model.domain_head.params()));
}

TEST_CASE("eval reproduces the trainer's final validation row") {
  const fs::path dir = case_dir("eval");
  const std::string manifest = make_corpus(dir, "corpus", 9);
  write_text(dir / "train.json", train_json(manifest, manifest, "run", 0.005, 2, "dann"));
  REQUIRE(run_cli(dir, "train --config train.json").code == 0);

  write_text(dir / "eval.json",
             "{\n"
             "  \"schema\": 1,\n"
             "  \"run_id\": \"evaltest\",\n"
             "  \"out_dir\": \"evalout\",\n"
             "  \"data\": {\n"
             "    \"checkpoint\": \"run/model.grlf\",\n"
             "    \"eval_manifest\": \"" + manifest + "\",\n"
             "    \"eval_split\": \"run/split.json\"\n"
             "  }\n"
             "}\n");
  const CmdResult r = run_cli(dir, "eval --config eval.json");
  REQUIRE_MESSAGE(r.code == 0, r.output);
  CHECK(r.output.find("eval: F1=") != std::string::npos);

  const std::vector<std::string> train_rows = lines_of(slurp(dir / "run" / "metrics.csv"));
  const std::vector<std::string> eval_rows = lines_of(slurp(dir / "evalout" / "metrics.csv"));
  REQUIRE(eval_rows.size() == 2);
  const std::vector<std::string> last = split_csv(train_rows.back());
  const std::vector<std::string> evaluated = split_csv(eval_rows.back());
  // identical confusion counts and scores for the same split and checkpoint
  for (std::size_t col = 3; col <= 10; ++col) CHECK(evaluated[col] == last[col]);
}

TEST_CASE("a divergent learning rate exits with the divergence code") {
  const fs::path dir = case_dir("divergence");
  const std::string manifest = make_corpus(dir, "corpus", 9);
  write_text(dir / "train.json", train_json(manifest, manifest, "run", 1e300, 3, "dann"));

  const CmdResult r = run_cli(dir, "train --config train.json");
  CHECK(r.code == 4);
  CHECK(r.output.find("divergence") != std::string::npos);
  CHECK(r.output.find("non-finite loss") != std::string::npos);
}

TEST_CASE("failure modes map to distinct exit codes") {
  const fs::path dir = case_dir("exit_codes");
  const std::string manifest = make_corpus(dir, "corpus", 9);

  SUBCASE("missing manifest file is an io error") {
    write_text(dir / "train.json", train_json("no/such.jsonl", "", "run", 0.01, 1,
                                              "source-only"));
    CHECK(run_cli(dir, "train --config train.json").code == 3);
  }

  SUBCASE("an empty manifest is a config error") {
    write_text(dir / "empty.jsonl", "");
    write_text(dir / "train.json", train_json("empty.jsonl", "", "run", 0.01, 1,
                                              "source-only"));
    const CmdResult r = run_cli(dir, "train --config train.json");
    CHECK(r.code == 2);
    CHECK(r.output.find("empty") != std::string::npos);
  }

  SUBCASE("a config file without the schema marker is rejected") {
    write_text(dir / "bad.json", "{\"out_dir\": \"x\"}");
    const CmdResult r = run_cli(dir, "synth --config bad.json");
    CHECK(r.code == 2);
    CHECK(r.output.find("schema") != std::string::npos);
  }

  SUBCASE("malformed JSON is rejected") {
    write_text(dir / "bad.json", "{\"schema\": 1,");
    CHECK(run_cli(dir, "synth --config bad.json").code == 2);
  }

  SUBCASE("invalid synthesis parameters are a config error") {
    write_text(dir / "bad.json",
               "{\"schema\": 1, \"out_dir\": \"x\", \"synth\": {\"forged_fraction\": 2.0}}");
    const CmdResult r = run_cli(dir, "synth --config bad.json");
    CHECK(r.code == 2);
    CHECK(r.output.find("forged_fraction") != std::string::npos);
  }

  SUBCASE("a truncated checkpoint is an io error") {
    write_text(dir / "train.json", train_json(manifest, manifest, "run", 0.005, 1, "dann"));
    REQUIRE(run_cli(dir, "train --config train.json").code == 0);
    const std::string bytes = slurp(dir / "run" / "model.grlf");
    write_text(dir / "cut.grlf", bytes.substr(0, bytes.size() - 10));
    write_text(dir / "eval.json",
               "{\"schema\": 1, \"out_dir\": \"e\", \"data\": {"
               "\"checkpoint\": \"cut.grlf\", \"eval_manifest\": \"" + manifest + "\"}}");
    CHECK(run_cli(dir, "eval --config eval.json").code == 3);
  }

  SUBCASE("unknown subcommands and empty invocations are usage errors") {
    CHECK(run_cli(dir, "frobnicate").code == 2);
    CHECK(run_cli(dir, "").code == 2);
  }
}

TEST_CASE("gradcheck passes clean and fails once a fault is injected") {
  const fs::path dir = case_dir("gradcheck");

  const CmdResult clean = run_cli(dir, "gradcheck --seed 3");
  CHECK(clean.code == 0);
  CHECK(clean.output.find("gradcheck: PASS") != std::string::npos);

  write_text(dir / "fault.json",
             "{\"schema\": 1, \"gradcheck\": {\"inject_fault\": true}}");
  const CmdResult faulty = run_cli(dir, "gradcheck --config fault.json --seed 3");
  CHECK(faulty.code == 1);
  CHECK(faulty.output.find("FAIL") != std::string::npos);
}

TEST_CASE("reproduce-toy smoke run completes and writes the comparison table") {
  const fs::path dir = case_dir("toy_smoke");
  write_text(dir / "toy.json",
             "{\n"
             "  \"schema\": 1,\n"
             "  \"out_dir\": \"toy\",\n"
             "  \"train\": {\"lr\": 0.01, \"seed\": 1},\n"
             "  \"model\": {\"feature_dim\": 8, \"domain_hidden\": 4},\n"
             "  \"toy\": {\"corpus_size\": 12, \"epochs\": 1, \"batch_size\": 6, \"seeds\": 1}\n"
             "}\n");

  const CmdResult r = run_cli(dir, "reproduce-toy --config toy.json");
  // margins are not expected from a one-seed smoke, only clean execution
  CHECK((r.code == 0 || r.code == 1));
  CHECK(r.output.find("toy: median target F1") != std::string::npos);
  CHECK(r.output.find("toy: elapsed") != std::string::npos);

  const std::vector<std::string> rows = lines_of(slurp(dir / "toy" / "toy_comparison.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "seed,variant,lambda,target_f1,source_val_f1,domain_accuracy");
  CHECK(split_csv(rows[1])[1] == "baseline");
  CHECK(split_csv(rows[2])[1] == "dann");
}
