#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grlforge/datasets.hpp"
#include "grlforge/errors.hpp"
#include "grlforge/image_io.hpp"
#include "grlforge/manifest.hpp"
#include "grlforge/synth.hpp"

using namespace grlforge;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "grlforge_ds_tests" / leaf;
  fs::create_directories(dir);
  return dir;
}

io::Manifest labeled_manifest(const std::vector<std::optional<int>>& labels) {
  io::Manifest m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ordered_json j;
    j["path"] = "img_" + std::to_string(i) + ".pgm";
    if (labels[i].has_value()) j["label"] = *labels[i];
    j["domain"] = "source";
    m.push_back(io::ManifestEntry(std::move(j)));
  }
  return m;
}

// tiny in-memory corpus whose pixel values identify each item
io::Corpus toy_corpus(std::size_t n) {
  io::Corpus corpus;
  corpus.manifest = labeled_manifest([n] {
    std::vector<std::optional<int>> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
    return labels;
  }());
  for (std::size_t i = 0; i < n; ++i)
    corpus.images.emplace_back(8, 8, 1, static_cast<double>(i + 1) / 100.0);
  return corpus;
}

std::vector<double> flatten(const std::vector<io::BatchView>& views) {
  std::vector<double> out;
  for (const auto& v : views)
    out.insert(out.end(), v.images.values().begin(), v.images.values().end());
  return out;
}

}  // namespace

TEST_CASE("manifest entries keep the canonical key order") {
  synth::SynthConfig config;
  config.size = 2;
  config.forged_fraction = 0.5;
  config.copy_move_prob = 1.0;
  const auto records = synth::synthesize_dataset(config).second;
  const io::Manifest manifest = io::manifest_from_records(records);

  std::vector<std::string> forged_keys, plain_keys;
  for (auto it = manifest[0].fields().begin(); it != manifest[0].fields().end(); ++it)
    forged_keys.push_back(it.key());
  for (auto it = manifest[1].fields().begin(); it != manifest[1].fields().end(); ++it)
    plain_keys.push_back(it.key());
  CHECK(forged_keys ==
        std::vector<std::string>{"path", "mask_path", "label", "domain", "provenance"});
  CHECK(plain_keys == std::vector<std::string>{"path", "label", "domain", "provenance"});
  CHECK(manifest[0].label() == 1);
  CHECK(manifest[0].mask_path().has_value());
  CHECK(!manifest[1].mask_path().has_value());
}

TEST_CASE("manifest save/load round trip is lossless") {
  synth::SynthConfig config;
  config.size = 6;
  config.copy_move_prob = 0.5;
  config.seed = 9;
  const auto records = synth::synthesize_dataset(config).second;
  const io::Manifest manifest = io::manifest_from_records(records);

  const fs::path path = tmp_dir("roundtrip") / "manifest.jsonl";
  io::save_manifest(path.string(), manifest);
  const io::Manifest back = io::load_manifest(path.string());
  REQUIRE(back.size() == manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    CHECK(back[i].fields().dump() == manifest[i].fields().dump());
    CHECK(back[i].path() == manifest[i].path());
    CHECK(back[i].label() == manifest[i].label());
  }

  // provenance reconstructs to the same values
  const auto prov = back[0].provenance();
  REQUIRE(prov.has_value());
  CHECK(prov->base_seed == records[0].provenance.base_seed);
  CHECK(prov->region.src_top == records[0].provenance.region.src_top);
  CHECK(prov->transform.rotation_deg == records[0].provenance.transform.rotation_deg);
}

TEST_CASE("unknown manifest fields survive a load/save cycle") {
  const fs::path path = tmp_dir("unknown") / "manifest.jsonl";
  {
    std::ofstream out(path);
    out << R"({"path":"a.pgm","label":1,"domain":"source","reviewer":"rb","extra":{"depth":3}})"
        << "\n";
    out << R"({"path":"b.pgm","domain":"target"})" << "\n";
  }
  const io::Manifest m = io::load_manifest(path.string());
  REQUIRE(m.size() == 2);
  CHECK(m[0].fields()["reviewer"] == "rb");
  CHECK(m[0].fields()["extra"]["depth"] == 3);
  CHECK(!m[1].label().has_value());
  CHECK(m[1].domain() == "target");

  const fs::path copy = tmp_dir("unknown") / "copy.jsonl";
  io::save_manifest(copy.string(), m);
  std::ifstream a(path), b(copy.string());
  std::string la, lb;
  std::getline(a, la);
  std::getline(b, lb);
  CHECK(la == lb);
}

TEST_CASE("manifest loading reports line numbers and duplicate paths") {
  const fs::path path = tmp_dir("errors") / "bad.jsonl";
  {
    std::ofstream out(path);
    out << R"({"path":"a.pgm","domain":"source"})" << "\n";
    out << "\n";  // blank lines are skipped
    out << "{not json}\n";
  }
  CHECK_THROWS_WITH_AS(io::load_manifest(path.string()), doctest::Contains(":3:"), ParseError);

  const fs::path dup = tmp_dir("errors") / "dup.jsonl";
  {
    std::ofstream out(dup);
    out << R"({"path":"a.pgm","domain":"source"})" << "\n";
    out << R"({"path":"a.pgm","domain":"source"})" << "\n";
  }
  CHECK_THROWS_WITH_AS(io::load_manifest(dup.string()), doctest::Contains("duplicate path"),
                       ParseError);
}

TEST_CASE("manifest field validation") {
  ordered_json ok;
  ok["path"] = "x.pgm";
  ok["domain"] = "source";
  CHECK_NOTHROW(io::ManifestEntry{ok});

  ordered_json bad_label = ok;
  bad_label["label"] = 2;
  CHECK_THROWS_AS(io::ManifestEntry{bad_label}, ValueError);

  ordered_json bad_domain = ok;
  bad_domain["domain"] = "middle";
  CHECK_THROWS_AS(io::ManifestEntry{bad_domain}, ValueError);

  ordered_json no_path;
  no_path["domain"] = "source";
  CHECK_THROWS_AS(io::ManifestEntry{no_path}, ValueError);

  // a label that contradicts the recorded forgery mode is rejected
  ordered_json lying = ok;
  lying["label"] = 0;
  lying["provenance"] = {{"mode", "copy_move"},
                         {"base_seed", 1},
                         {"item_seed", 2},
                         {"region",
                          {{"src_top", 0},
                           {"src_left", 0},
                           {"src_height", 8},
                           {"src_width", 8},
                           {"paste_top", 16},
                           {"paste_left", 16}}},
                         {"transform",
                          {{"rotation_deg", 0.0},
                           {"scale", 1.0},
                           {"resize", 1.0},
                           {"blur_sigma", 0.0}}}};
  CHECK_THROWS_AS(io::ManifestEntry{lying}, ValueError);
}

TEST_CASE("splits follow floor-plus-largest-remainder quotas") {
  // 13 label-0 and 12 label-1 at fraction 0.2: quotas floor to 2 + 2 with
  // remainders 0.6 and 0.4, and the fifth seat goes to the larger remainder.
  std::vector<std::optional<int>> labels(25);
  for (std::size_t i = 0; i < 13; ++i) labels[i] = 0;
  for (std::size_t i = 13; i < 25; ++i) labels[i] = 1;
  const io::Manifest manifest = labeled_manifest(labels);

  const io::Split split = io::make_split(manifest, 0.2, 77);
  CHECK(split.test.size() == 5);
  CHECK(split.train.size() == 20);
  std::size_t zeros = 0, ones = 0;
  for (std::size_t i : split.test) (*manifest[i].label() == 0 ? zeros : ones) += 1;
  CHECK(zeros == 3);
  CHECK(ones == 2);
}

TEST_CASE("remainder ties give the seat to the lower label") {
  // 10 + 10 at fraction 0.25: both remainders are 0.5, llround(5.0) = 5
  // seats, floors give 2 + 2, the tie-broken seat lands on label 0.
  std::vector<std::optional<int>> labels(20);
  for (std::size_t i = 0; i < 10; ++i) labels[i] = 0;
  for (std::size_t i = 10; i < 20; ++i) labels[i] = 1;
  const io::Split split = io::make_split(labeled_manifest(labels), 0.25, 3);
  CHECK(split.test.size() == 5);
  std::size_t zeros = 0;
  for (std::size_t i : split.test) zeros += i < 10 ? 1 : 0;
  CHECK(zeros == 3);
}

TEST_CASE("balanced 100-item splits take the exact per-stratum counts") {
  std::vector<std::optional<int>> labels(100);
  for (std::size_t i = 0; i < 100; ++i) labels[i] = i < 50 ? 0 : 1;
  const io::Split split = io::make_split(labeled_manifest(labels), 0.2, 5);
  CHECK(split.test.size() == 20);
  std::size_t zeros = 0;
  for (std::size_t i : split.test) zeros += i < 50 ? 1 : 0;
  CHECK(zeros == 10);
}

TEST_CASE("splits partition the manifest") {
  std::vector<std::optional<int>> labels(30);
  for (std::size_t i = 0; i < 30; ++i)
    labels[i] = i % 3 == 2 ? std::optional<int>{} : std::optional<int>{static_cast<int>(i % 2)};
  const io::Manifest manifest = labeled_manifest(labels);
  const io::Split split = io::make_split(manifest, 0.3, 11);

  std::vector<char> seen(30, 0);
  for (std::size_t i : split.train) seen.at(i) += 1;
  for (std::size_t i : split.test) seen.at(i) += 1;
  for (char s : seen) CHECK(s == 1);
  CHECK(std::is_sorted(split.train.begin(), split.train.end()));
  CHECK(std::is_sorted(split.test.begin(), split.test.end()));
}

TEST_CASE("unlabeled entries form their own stratum") {
  std::vector<std::optional<int>> labels(8);
  for (std::size_t i = 0; i < 4; ++i) labels[i] = 0;
  const io::Split split = io::make_split(labeled_manifest(labels), 0.5, 1);
  CHECK(split.test.size() == 4);
  std::size_t unlabeled = 0;
  for (std::size_t i : split.test) unlabeled += i >= 4 ? 1 : 0;
  CHECK(unlabeled == 2);
}

TEST_CASE("splits are seed-deterministic") {
  std::vector<std::optional<int>> labels(40);
  for (std::size_t i = 0; i < 40; ++i) labels[i] = static_cast<int>(i % 2);
  const io::Manifest manifest = labeled_manifest(labels);
  const io::Split a = io::make_split(manifest, 0.25, 7);
  const io::Split b = io::make_split(manifest, 0.25, 7);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  const io::Split c = io::make_split(manifest, 0.25, 8);
  CHECK(a.test != c.test);
}

TEST_CASE("degenerate fractions and bad fractions") {
  const io::Manifest manifest = labeled_manifest({0, 1, 0, 1});
  CHECK(io::make_split(manifest, 0.0, 1).test.empty());
  CHECK(io::make_split(manifest, 1.0, 1).train.empty());
  CHECK_THROWS_AS(io::make_split(manifest, 1.5, 1), ValueError);
}

TEST_CASE("split save/load round trip") {
  std::vector<std::optional<int>> labels(12);
  for (std::size_t i = 0; i < 12; ++i) labels[i] = static_cast<int>(i % 2);
  const io::Split split = io::make_split(labeled_manifest(labels), 0.25, 19);
  const fs::path path = tmp_dir("split") / "split.json";
  io::save_split(path.string(), split);
  const io::Split back = io::load_split(path.string());
  CHECK(back.train == split.train);
  CHECK(back.test == split.test);
  CHECK(back.seed == 19);
  CHECK(back.test_fraction == 0.25);
  CHECK_THROWS_AS(io::load_split((tmp_dir("split") / "missing.json").string()), IoError);
}

TEST_CASE("normalization matches a hand computation") {
  std::vector<Image> images;
  images.emplace_back(2, 2, 1);
  images[0].pixels = {0.0, 1.0, 0.0, 1.0};
  images.emplace_back(2, 2, 1);
  images[1].pixels = {1.0, 1.0, 1.0, 1.0};

  const io::Normalization norm = io::compute_normalization(images, {0, 1});
  REQUIRE(norm.mean.size() == 1);
  CHECK(norm.mean[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(norm.stddev[0] == doctest::Approx(std::sqrt(0.1875)).epsilon(1e-12));
}

TEST_CASE("the variance floor keeps a constant corpus finite and near zero") {
  std::vector<Image> images(3, Image(4, 4, 3, 0.7));
  const io::Normalization norm = io::compute_normalization(images, {0, 1, 2});
  for (double s : norm.stddev) CHECK(s == doctest::Approx(1e-4).epsilon(1e-9));

  // mean accumulation rounds at the last ulp, so values are ~0, not == 0
  const Tensor t = io::images_to_tensor(images, {0, 1, 2}, &norm);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::isfinite(t[i]));
    CHECK(std::abs(t[i]) < 1e-9);
  }
}

TEST_CASE("images_to_tensor lays pixels out channel-major") {
  std::vector<Image> images;
  images.emplace_back(2, 2, 3);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        images[0].at(r, c, ch) = static_cast<double>(100 * ch + 10 * r + c);

  const Tensor t = io::images_to_tensor(images, {0}, nullptr);
  REQUIRE(t.shape() == std::vector<std::size_t>{1, 3, 2, 2});
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c)
        CHECK(t.at4(0, ch, r, c) == static_cast<double>(100 * ch + 10 * r + c));

  images.emplace_back(4, 2, 3);  // mismatched height
  CHECK_THROWS_AS(io::images_to_tensor(images, {0, 1}, nullptr), ShapeError);
}

TEST_CASE("normalization save/load round trip") {
  io::Normalization norm;
  norm.mean = {0.25, 0.5, 0.75};
  norm.stddev = {1.0, 0.5, 0.125};
  const fs::path path = tmp_dir("norm") / "norm.json";
  io::save_normalization(path.string(), norm);
  const io::Normalization back = io::load_normalization(path.string());
  CHECK(back.mean == norm.mean);
  CHECK(back.stddev == norm.stddev);
}

TEST_CASE("batches cover the selection in deterministic shuffled chunks") {
  const io::Corpus corpus = toy_corpus(10);
  const auto idx = io::all_indices(10);

  const auto views = io::batches(corpus, idx, 4, 5, 0, nullptr);
  REQUIRE(views.size() == 3);
  CHECK(views[0].images.dim(0) == 4);
  CHECK(views[1].images.dim(0) == 4);
  CHECK(views[2].images.dim(0) == 2);

  // every item appears exactly once; values identify items
  std::vector<int> counts(10, 0);
  for (const auto& v : views)
    for (std::size_t n = 0; n < v.images.dim(0); ++n) {
      const double val = v.images[n * 64];
      const int item = static_cast<int>(std::lround(val * 100.0)) - 1;
      REQUIRE(item >= 0);
      REQUIRE(item < 10);
      counts[static_cast<std::size_t>(item)] += 1;
      // label rides along with its image
      CHECK(v.labels[n] == item % 2);
    }
  for (int c : counts) CHECK(c == 1);

  // same (seed, epoch) replays; another epoch reshuffles
  CHECK(flatten(io::batches(corpus, idx, 4, 5, 0, nullptr)) == flatten(views));
  CHECK(flatten(io::batches(corpus, idx, 4, 5, 1, nullptr)) != flatten(views));
}

TEST_CASE("one unlabeled entry strips labels from every batch") {
  io::Corpus corpus = toy_corpus(6);
  ordered_json j = corpus.manifest[3].fields();
  j.erase("label");
  corpus.manifest[3] = io::ManifestEntry(std::move(j));

  const auto views = io::batches(corpus, io::all_indices(6), 4, 1, 0, nullptr);
  for (const auto& v : views) CHECK(v.labels.empty());

  CHECK_THROWS_WITH_AS(io::labels_of(corpus, io::all_indices(6)),
                       doctest::Contains("img_3.pgm"), ValueError);
}

TEST_CASE("source and target dataset views") {
  const io::Corpus corpus = toy_corpus(4);
  const dann::SourceDataset src = io::to_source_dataset(corpus, {0, 1, 2, 3}, nullptr);
  CHECK(src.labels == std::vector<int>{0, 1, 0, 1});
  CHECK(src.images.dim(0) == 4);
  const dann::TargetDataset tgt = io::to_target_dataset(corpus, {1, 3}, nullptr);
  CHECK(tgt.images.dim(0) == 2);
}

TEST_CASE("load_corpus resolves image paths relative to the manifest") {
  const fs::path dir = tmp_dir("corpus");
  synth::SynthConfig config;
  config.size = 4;
  config.seed = 3;
  const auto [samples, records] = synth::synthesize_dataset(config);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    io::write_image((dir / records[i].path).string(), samples[i].image);
    if (!records[i].mask_path.empty())
      io::write_image((dir / records[i].mask_path).string(), samples[i].mask);
  }
  io::save_manifest((dir / "manifest.jsonl").string(), io::manifest_from_records(records));

  const io::Corpus corpus = io::load_corpus((dir / "manifest.jsonl").string());
  REQUIRE(corpus.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(corpus.images[i].height == 32);
    CHECK(corpus.images[i].channels == 3);
    // loaded pixels are the quantized originals
    for (std::size_t p = 0; p < corpus.images[i].pixels.size(); ++p) {
      const double q =
          static_cast<double>(std::lround(samples[i].image.pixels[p] * 255.0)) / 255.0;
      CHECK(corpus.images[i].pixels[p] == q);
    }
  }
}
