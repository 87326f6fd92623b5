#include "grlforge/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "grlforge/errors.hpp"
#include "grlforge/image_io.hpp"
#include "grlforge/rng.hpp"

namespace grlforge::io {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

Corpus load_corpus(const std::string& manifest_path) {
  Corpus corpus;
  corpus.manifest = load_manifest(manifest_path);
  const fs::path root = fs::path(manifest_path).parent_path();
  corpus.images.reserve(corpus.manifest.size());
  for (const ManifestEntry& e : corpus.manifest)
    corpus.images.push_back(read_image((root / e.path()).string()));
  return corpus;
}

Split make_split(const Manifest& manifest, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
    throw ValueError("make_split: fraction must lie in [0, 1]");

  // stratum key: label value, or -1 for unlabeled entries
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto lbl = manifest[i].label();
    strata[lbl.has_value() ? *lbl : -1].push_back(i);
  }

  const std::size_t total_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(manifest.size())));

  struct Quota {
    int key;
    std::size_t count;
    std::size_t take;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [key, idx] : strata) {
    const double exact = test_fraction * static_cast<double>(idx.size());
    const std::size_t fl = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({key, idx.size(), fl, exact - static_cast<double>(fl)});
    assigned += fl;
  }
  // hand out the remaining seats by descending remainder, lower key first
  std::vector<std::size_t> order(quotas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (quotas[a].remainder != quotas[b].remainder)
      return quotas[a].remainder > quotas[b].remainder;
    return quotas[a].key < quotas[b].key;
  });
  for (std::size_t k = 0; assigned < total_test; k = (k + 1) % order.size()) {
    Quota& q = quotas[order[k]];
    if (q.take < q.count) {
      ++q.take;
      ++assigned;
    }
  }

  Split split;
  split.test_fraction = test_fraction;
  split.seed = seed;
  for (Quota& q : quotas) {
    std::vector<std::size_t> idx = strata[q.key];
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(q.key + 1)));
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < q.take ? split.test : split.train).push_back(idx[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void save_split(const std::string& path, const Split& split) {
  ordered_json j;
  j["schema"] = 1;
  j["seed"] = split.seed;
  j["test_fraction"] = split.test_fraction;
  j["train"] = split.train;
  j["test"] = split.test;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_split: cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

Split load_split(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_split: cannot open '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("load_split: " + path + ": " + e.what());
  }
  Split split;
  try {
    split.seed = j.at("seed").get<std::uint64_t>();
    split.test_fraction = j.at("test_fraction").get<double>();
    split.train = j.at("train").get<std::vector<std::size_t>>();
    split.test = j.at("test").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("load_split: " + path + ": " + e.what());
  }
  return split;
}

Normalization compute_normalization(const std::vector<Image>& images,
                                    const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ValueError("compute_normalization: no images selected");
  const std::size_t channels = images.at(indices[0]).channels;
  std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
  std::size_t per_channel = 0;
  for (std::size_t i : indices) {
    const Image& img = images.at(i);
    if (img.channels != channels)
      throw ShapeError("compute_normalization: mixed channel counts");
    per_channel += img.pixel_count();
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = img.pixels[p * channels + c];
        sum[c] += v;
        sq[c] += v * v;
      }
  }
  Normalization norm;
  norm.mean.resize(channels);
  norm.stddev.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    norm.mean[c] = sum[c] / static_cast<double>(per_channel);
    const double var = sq[c] / static_cast<double>(per_channel) - norm.mean[c] * norm.mean[c];
    norm.stddev[c] = std::sqrt(std::max(var, 1e-8));
  }
  return norm;
}

void save_normalization(const std::string& path, const Normalization& norm) {
  ordered_json j;
  j["schema"] = 1;
  j["mean"] = norm.mean;
  j["stddev"] = norm.stddev;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_normalization: cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

Normalization load_normalization(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_normalization: cannot open '" + path + "'");
  ordered_json j;
  try {
    in >> j;
    Normalization norm;
    norm.mean = j.at("mean").get<std::vector<double>>();
    norm.stddev = j.at("stddev").get<std::vector<double>>();
    return norm;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("load_normalization: " + path + ": " + e.what());
  }
}

Tensor images_to_tensor(const std::vector<Image>& images,
                        const std::vector<std::size_t>& indices, const Normalization* norm) {
  if (indices.empty()) throw ValueError("images_to_tensor: empty selection");
  const Image& first = images.at(indices[0]);
  const std::size_t c = first.channels, h = first.height, w = first.width;
  if (norm && norm->mean.size() != c)
    throw ShapeError("images_to_tensor: normalization channel count mismatch");

  Tensor out({indices.size(), c, h, w});
  double* dst = out.data();
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const Image& img = images.at(indices[n]);
    if (img.channels != c || img.height != h || img.width != w)
      throw ShapeError("images_to_tensor: image dimensions differ within the selection");
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t col = 0; col < w; ++col) {
          double v = img.at(r, col, ch);
          if (norm) v = (v - norm->mean[ch]) / norm->stddev[ch];
          dst[((n * c + ch) * h + r) * w + col] = v;
        }
  }
  return out;
}

std::vector<BatchView> batches(const Corpus& corpus, const std::vector<std::size_t>& indices,
                               std::size_t batch_size, std::uint64_t seed, std::size_t epoch,
                               const Normalization* norm) {
  if (batch_size < 1) throw ValueError("batches: batch_size must be >= 1");
  std::vector<std::size_t> order = indices;
  Rng rng(mix_seed(seed, epoch));
  rng.shuffle(order);

  bool labeled = !order.empty();
  for (std::size_t i : order)
    if (!corpus.manifest.at(i).label().has_value()) labeled = false;

  std::vector<BatchView> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    BatchView view{images_to_tensor(corpus.images, chunk, norm), {}};
    if (labeled)
      for (std::size_t i : chunk) view.labels.push_back(*corpus.manifest.at(i).label());
    out.push_back(std::move(view));
  }
  return out;
}

dann::SourceDataset to_source_dataset(const Corpus& corpus,
                                      const std::vector<std::size_t>& indices,
                                      const Normalization* norm) {
  dann::SourceDataset ds;
  ds.images = images_to_tensor(corpus.images, indices, norm);
  ds.labels = labels_of(corpus, indices);
  return ds;
}

dann::TargetDataset to_target_dataset(const Corpus& corpus,
                                      const std::vector<std::size_t>& indices,
                                      const Normalization* norm) {
  dann::TargetDataset ds;
  ds.images = images_to_tensor(corpus.images, indices, norm);
  return ds;
}

std::vector<int> labels_of(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto lbl = corpus.manifest.at(i).label();
    if (!lbl.has_value())
      throw ValueError("entry '" + corpus.manifest.at(i).path() + "' has no label");
    labels.push_back(*lbl);
  }
  return labels;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace grlforge::io
