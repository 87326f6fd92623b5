#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grlforge/dann.hpp"
#include "grlforge/image.hpp"
#include "grlforge/manifest.hpp"
#include "grlforge/tensor.hpp"

namespace grlforge::io {

// Manifest plus its decoded images, resolved relative to the manifest file.
struct Corpus {
  Manifest manifest;
  std::vector<Image> images;

  std::size_t size() const { return manifest.size(); }
};

Corpus load_corpus(const std::string& manifest_path);

// Disjoint index sets over one manifest; reproducible from (seed, fraction).
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
};

// Stratified by label (entries without labels form their own stratum): each
// stratum is shuffled with mix_seed(seed, stratum key), the test set takes
// the shuffled prefix. Stratum quotas start at floor(fraction * count); the
// seats still missing from round(fraction * total) go to the strata with the
// largest fractional remainders, ties resolved toward the lower label.
Split make_split(const Manifest& manifest, double test_fraction, std::uint64_t seed);

void save_split(const std::string& path, const Split& split);
Split load_split(const std::string& path);

// Per-channel affine normalization, computed on training images only.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;  // sqrt(max(variance, 1e-8))
};

Normalization compute_normalization(const std::vector<Image>& images,
                                     const std::vector<std::size_t>& indices);

void save_normalization(const std::string& path, const Normalization& norm);
Normalization load_normalization(const std::string& path);

// Packs selected images into an [N, C, H, W] tensor, normalized when norm is
// non-null. All selected images must share dimensions.
Tensor images_to_tensor(const std::vector<Image>& images,
                        const std::vector<std::size_t>& indices, const Normalization* norm);

struct BatchView {
  Tensor images;
  std::vector<int> labels;  // empty when the manifest rows carry no labels
};

// Epoch iteration over a corpus subset: reshuffles indices with
// mix_seed(seed, epoch), then emits ceil(n / batch_size) batches, the final
// one short. Labels are attached only when every selected entry has one.
std::vector<BatchView> batches(const Corpus& corpus, const std::vector<std::size_t>& indices,
                               std::size_t batch_size, std::uint64_t seed, std::size_t epoch,
                               const Normalization* norm);

// Training-facing views: the target view structurally has no label field.
dann::SourceDataset to_source_dataset(const Corpus& corpus,
                                      const std::vector<std::size_t>& indices,
                                      const Normalization* norm);
dann::TargetDataset to_target_dataset(const Corpus& corpus,
                                      const std::vector<std::size_t>& indices,
                                      const Normalization* norm);

// Evaluation-facing labels; throws when any selected entry is unlabeled.
std::vector<int> labels_of(const Corpus& corpus, const std::vector<std::size_t>& indices);

std::vector<std::size_t> all_indices(std::size_t n);

}  // namespace grlforge::io
