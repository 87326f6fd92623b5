#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "grlforge/dann.hpp"

namespace grlforge::eval {

// Forged (label 1) is the positive class throughout.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

struct MetricsReport {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool has_domain_accuracy = false;
  double domain_accuracy = 0.0;
};

ConfusionCounts confusion(const std::vector<int>& preds, const std::vector<int>& truth);

// 0/0 ratios resolve to 0: precision = tp/(tp+fp), recall = tp/(tp+fn),
// f1 = 2pr/(p+r), accuracy = (tp+tn)/total.
MetricsReport metrics(const ConfusionCounts& counts);

// Class-head report over a labeled evaluation view. When target images are
// supplied as well, the domain head is scored on a balanced sample: all of
// the smaller domain plus an equal-size seeded draw from the larger one.
MetricsReport evaluate(const dann::DannModel& model, const Tensor& images,
                       const std::vector<int>& labels);
MetricsReport evaluate(const dann::DannModel& model, const Tensor& source_images,
                       const std::vector<int>& source_labels, const Tensor& target_images,
                       std::uint64_t balance_seed = 0);

double domain_head_accuracy(const dann::DannModel& model, const Tensor& source_images,
                            const Tensor& target_images, std::uint64_t balance_seed = 0);

// One flat CSV row per evaluation; the file gains a header when created.
void append_metrics_csv(const std::string& path, const std::string& run_id, std::size_t epoch,
                        double lambda, const MetricsReport& report);

}  // namespace grlforge::eval
