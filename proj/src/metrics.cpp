#include "grlforge/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "grlforge/errors.hpp"
#include "grlforge/rng.hpp"

namespace grlforge::eval {

ConfusionCounts confusion(const std::vector<int>& preds, const std::vector<int>& truth) {
  if (preds.size() != truth.size())
    throw ShapeError("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " labels");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (truth[i] != 0 && truth[i] != 1))
      throw ValueError("confusion: labels must be 0 or 1");
    if (truth[i] == 1)
      ++(preds[i] == 1 ? c.tp : c.fn);
    else
      ++(preds[i] == 1 ? c.fp : c.tn);
  }
  return c;
}

MetricsReport metrics(const ConfusionCounts& counts) {
  if (counts.total() == 0) throw ValueError("metrics: no evaluated samples");
  MetricsReport r;
  r.counts = counts;
  const double tp = static_cast<double>(counts.tp);
  r.precision = counts.tp + counts.fp == 0 ? 0.0 : tp / static_cast<double>(counts.tp + counts.fp);
  r.recall = counts.tp + counts.fn == 0 ? 0.0 : tp / static_cast<double>(counts.tp + counts.fn);
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.accuracy = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
  return r;
}

MetricsReport evaluate(const dann::DannModel& model, const Tensor& images,
                       const std::vector<int>& labels) {
  if (images.shape().at(0) != labels.size())
    throw ShapeError("evaluate: image count differs from label count");
  if (labels.empty()) throw ValueError("evaluate: empty evaluation set");
  return metrics(confusion(dann::predict(model, images), labels));
}

namespace {

// All of the smaller domain plus an equal-size seeded draw from the larger.
void balanced_pick(std::size_t n_small, std::size_t n_large, std::uint64_t seed,
                   std::vector<std::size_t>* large_pick) {
  std::vector<std::size_t> idx(n_large);
  for (std::size_t i = 0; i < n_large; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, 0xbadceull));
  rng.shuffle(idx);
  large_pick->assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_small));
}

Tensor select_rows(const Tensor& t, const std::vector<std::size_t>& rows) {
  std::vector<std::size_t> shape = t.shape();
  const std::size_t row_elems = t.size() / shape.at(0);
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(t.data() + rows[i] * row_elems, t.data() + (rows[i] + 1) * row_elems,
              out.data() + i * row_elems);
  return out;
}

}  // namespace

double domain_head_accuracy(const dann::DannModel& model, const Tensor& source_images,
                            const Tensor& target_images, std::uint64_t balance_seed) {
  const std::size_t ns = source_images.shape().at(0);
  const std::size_t nt = target_images.shape().at(0);
  if (ns == 0 || nt == 0)
    throw ValueError("domain_head_accuracy: both domains must be non-empty");

  Tensor src = source_images, tgt = target_images;
  if (ns != nt) {
    std::vector<std::size_t> pick;
    if (ns < nt) {
      balanced_pick(ns, nt, balance_seed, &pick);
      tgt = select_rows(target_images, pick);
    } else {
      balanced_pick(nt, ns, balance_seed, &pick);
      src = select_rows(source_images, pick);
    }
  }

  std::size_t correct = 0, total = 0;
  const auto score = [&](const Tensor& imgs, int domain_label) {
    const std::vector<int> preds = dann::predict_domain(model, imgs);
    for (int p : preds) {
      correct += (p == domain_label) ? 1 : 0;
      ++total;
    }
  };
  score(src, 0);
  score(tgt, 1);
  return static_cast<double>(correct) / static_cast<double>(total);
}

MetricsReport evaluate(const dann::DannModel& model, const Tensor& source_images,
                       const std::vector<int>& source_labels, const Tensor& target_images,
                       std::uint64_t balance_seed) {
  MetricsReport r = evaluate(model, source_images, source_labels);
  r.has_domain_accuracy = true;
  r.domain_accuracy = domain_head_accuracy(model, source_images, target_images, balance_seed);
  return r;
}

void append_metrics_csv(const std::string& path, const std::string& run_id, std::size_t epoch,
                        double lambda, const MetricsReport& report) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("append_metrics_csv: cannot open '" + path + "'");
  if (fresh)
    out << "run_id,epoch,lambda,tp,fp,tn,fn,precision,recall,f1,accuracy,domain_accuracy\n";
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%zu,%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,",
                run_id.c_str(), epoch, lambda, report.counts.tp, report.counts.fp,
                report.counts.tn, report.counts.fn, report.precision, report.recall, report.f1,
                report.accuracy);
  out << buf;
  if (report.has_domain_accuracy) {
    std::snprintf(buf, sizeof(buf), "%.17g", report.domain_accuracy);
    out << buf;
  }
  out << "\n";
  if (!out) throw IoError("append_metrics_csv: short write to '" + path + "'");
}

}  // namespace grlforge::eval
