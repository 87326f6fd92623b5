#include "grlforge/dann.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "grlforge/errors.hpp"
#include "grlforge/rng.hpp"

namespace grlforge::dann {

// ---------------------------------------------------------------------------
// GRL
// ---------------------------------------------------------------------------

void GrlConfig::validate() const {
  if (mode == Mode::constant) {
    if (!(lambda0 >= 0.0)) throw ConfigError("GrlConfig: lambda0 must be >= 0");
  } else {
    if (!(gamma > 0.0)) throw ConfigError("GrlConfig: gamma must be > 0");
  }
}

Tensor grl_forward(const Tensor& x) { return x; }

Tensor grl_backward(const Tensor& grad_out, double lambda) {
  if (!(lambda >= 0.0)) throw ValueError("grl_backward: lambda must be >= 0");
  if (lambda == 0.0) return Tensor::zeros_like(grad_out);
  Tensor out = Tensor::zeros_like(grad_out);
  for (std::size_t i = 0; i < grad_out.size(); ++i) out[i] = -lambda * grad_out[i];
  return out;
}

double lambda_at(const GrlConfig& config, double progress) {
  if (!(progress >= 0.0 && progress <= 1.0))
    throw ValueError("lambda_at: progress " + std::to_string(progress) + " outside [0, 1]");
  config.validate();
  if (config.mode == GrlConfig::Mode::constant) return config.lambda0;
  return 2.0 / (1.0 + std::exp(-config.gamma * progress)) - 1.0;
}

// ---------------------------------------------------------------------------
// model construction
// ---------------------------------------------------------------------------

void DannModel::validate() const {
  const auto& feat_out = feature.output_dims();
  if (feat_out.size() != 1)
    throw ConfigError("DannModel: feature extractor must emit a flat feature vector");
  const std::size_t d = feat_out[0];
  auto check_head = [&](const nn::Network& head, const char* name) {
    if (head.input_dims() != std::vector<std::size_t>{d})
      throw ConfigError(std::string("DannModel: ") + name + " input width does not match "
                        "feature width " + std::to_string(d));
    if (head.output_dims() != std::vector<std::size_t>{2})
      throw ConfigError(std::string("DannModel: ") + name + " must emit 2 logits");
  };
  check_head(source_head, "source head");
  check_head(domain_head, "domain head");
  grl.validate();
}

namespace {

// Preset table. Shapes here are data; feature_dim and domain_hidden come
// from DannBuildConfig.
struct BackbonePreset {
  const char* name;
  std::size_t conv1_channels;  // small-cnn only
  std::size_t conv2_channels;
  std::size_t mlp_hidden;  // mlp only
};

constexpr BackbonePreset kPresets[] = {
    {"small-cnn", 8, 16, 0},
    {"mlp", 0, 0, 128},
};

const BackbonePreset& find_preset(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name == p.name) return p;
  }
  std::ostringstream msg;
  msg << "unknown backbone preset '" << name << "' (known:";
  for (const auto& p : kPresets) msg << " " << p.name;
  msg << ")";
  throw ConfigError(msg.str());
}

}  // namespace

DannModel build_dann(const std::vector<std::size_t>& input_dims,
                     const DannBuildConfig& config) {
  const BackbonePreset& preset = find_preset(config.backbone);
  if (config.feature_dim < 1 || config.domain_hidden < 1)
    throw ConfigError("build_dann: feature_dim and domain_hidden must be >= 1");

  std::vector<nn::LayerSpec> feature_specs;
  if (std::string(preset.name) == "small-cnn") {
    if (input_dims.size() != 3)
      throw ConfigError("small-cnn backbone needs C x H x W input, got rank " +
                        std::to_string(input_dims.size()));
    feature_specs = {
        nn::Conv2dSpec{input_dims[0], preset.conv1_channels, 3, 1, 1},
        nn::ReluSpec{},
        nn::MaxPoolSpec{2, 2},
        nn::Conv2dSpec{preset.conv1_channels, preset.conv2_channels, 3, 1, 1},
        nn::ReluSpec{},
        nn::MaxPoolSpec{2, 2},
        nn::FlattenSpec{},
    };
    const std::size_t flat =
        preset.conv2_channels * (input_dims[1] / 4) * (input_dims[2] / 4);
    feature_specs.push_back(nn::LinearSpec{flat, config.feature_dim});
    feature_specs.push_back(nn::ReluSpec{});
  } else {  // mlp
    std::size_t flat = 1;
    for (std::size_t d : input_dims) flat *= d;
    feature_specs = {
        nn::FlattenSpec{},
        nn::LinearSpec{flat, preset.mlp_hidden},
        nn::ReluSpec{},
        nn::LinearSpec{preset.mlp_hidden, config.feature_dim},
        nn::ReluSpec{},
    };
  }

  DannModel model;
  model.feature = nn::Network(std::move(feature_specs), input_dims);
  model.source_head =
      nn::Network({nn::LinearSpec{config.feature_dim, 2}}, {config.feature_dim});
  model.domain_head = nn::Network({nn::LinearSpec{config.feature_dim, config.domain_hidden},
                                   nn::ReluSpec{},
                                   nn::LinearSpec{config.domain_hidden, 2}},
                                  {config.feature_dim});
  model.grl = config.grl;
  model.feature.init_glorot(mix_seed(config.init_seed, 1));
  model.source_head.init_glorot(mix_seed(config.init_seed, 2));
  model.domain_head.init_glorot(mix_seed(config.init_seed, 3));
  model.validate();
  return model;
}

// ---------------------------------------------------------------------------
// forward / loss / step
// ---------------------------------------------------------------------------

namespace {

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.rank() != b.rank() ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1))
    throw ShapeError("cannot concatenate " + a.shape_str() + " with " + b.shape_str());
  std::vector<std::size_t> shape = a.shape();
  shape[0] += b.dim(0);
  Tensor out(shape);
  std::memcpy(out.data(), a.data(), a.size() * sizeof(double));
  std::memcpy(out.data() + a.size(), b.data(), b.size() * sizeof(double));
  return out;
}

std::vector<int> domain_labels(std::size_t n_source, std::size_t n_target) {
  std::vector<int> labels(n_source + n_target, 1);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_source), 0);
  return labels;
}

void check_batch(const DomainBatch& batch) {
  if (batch.source_images.empty() || batch.source_images.dim(0) < 1)
    throw ShapeError("DomainBatch: at least one source sample required");
  if (batch.target_images.empty() || batch.target_images.dim(0) < 1)
    throw ShapeError("DomainBatch: at least one target sample required");
  if (batch.source_class_labels.size() != batch.source_images.dim(0))
    throw ShapeError("DomainBatch: source labels length " +
                     std::to_string(batch.source_class_labels.size()) + " != source batch " +
                     std::to_string(batch.source_images.dim(0)));
}

std::size_t count_correct(const Tensor& logits, const std::vector<int>& labels) {
  std::size_t correct = 0;
  const std::size_t classes = logits.dim(1);
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    const double* row = logits.data() + r * classes;
    std::size_t arg = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (row[c] > row[arg]) arg = c;
    if (static_cast<int>(arg) == labels[r]) ++correct;
  }
  return correct;
}

}  // namespace

DannForward dann_forward(const DannModel& model, const DomainBatch& batch) {
  check_batch(batch);
  DannForward fwd;
  fwd.n_source = batch.source_images.dim(0);
  fwd.n_target = batch.target_images.dim(0);
  const Tensor all = concat_rows(batch.source_images, batch.target_images);
  fwd.features = model.feature.forward(all, fwd.feature_trace);
  const Tensor source_features = fwd.features.first_rows(fwd.n_source);
  fwd.source_class_logits = model.source_head.forward(source_features, fwd.source_trace);
  fwd.domain_logits = model.domain_head.forward(grl_forward(fwd.features), fwd.domain_trace);
  return fwd;
}

LossBreakdown dann_loss(const Tensor& source_logits, const std::vector<int>& source_labels,
                        const Tensor& domain_logits, double lambda) {
  if (!(lambda >= 0.0)) throw ValueError("dann_loss: lambda must be >= 0");
  // lambda does not scale the reported losses; the reversal acts only on
  // the backward path.
  const std::size_t n_source = source_logits.empty() ? 0 : source_logits.dim(0);
  const std::size_t n_total = domain_logits.dim(0);
  if (n_total < n_source)
    throw ShapeError("dann_loss: domain rows < source rows");
  LossBreakdown loss;
  loss.l_source = nn::softmax_cross_entropy(source_logits, source_labels).loss;
  loss.l_domain =
      nn::softmax_cross_entropy(domain_logits, domain_labels(n_source, n_total - n_source))
          .loss;
  loss.l_total = loss.l_source + loss.l_domain;
  return loss;
}

namespace {

struct StepOutcome {
  LossBreakdown loss;
  std::size_t source_correct = 0;
  std::size_t domain_correct = 0;
  std::size_t domain_total = 0;
};

// Routes head gradients into the feature extractor: the source loss
// gradient lands on the source rows, the domain gradient passes the
// reversal layer first. lambda == 0 restricts the feature backward to the
// source rows, which keeps the feature/source update bit-identical to a
// source-only classifier.
void backprop_feature(DannModel& model, const DannForward& fwd, const Tensor& source_feat_grad,
                      const Tensor& domain_feat_grad, double lambda) {
  if (lambda == 0.0) {
    nn::Network::Trace source_rows = fwd.feature_trace.first_rows(fwd.n_source);
    model.feature.backward(source_rows, source_feat_grad);
    return;
  }
  Tensor reversed = grl_backward(domain_feat_grad, lambda);
  const std::size_t d = reversed.dim(1);
  for (std::size_t r = 0; r < fwd.n_source; ++r)
    for (std::size_t c = 0; c < d; ++c) reversed[r * d + c] += source_feat_grad[r * d + c];
  model.feature.backward(fwd.feature_trace, reversed);
}

StepOutcome step_impl(DannModel& model, const DomainBatch& batch,
                      const nn::TrainConfig& config, double lambda) {
  if (!(lambda >= 0.0)) throw ValueError("train_step: lambda must be >= 0");
  DannForward fwd = dann_forward(model, batch);

  nn::XentResult source_xent =
      nn::softmax_cross_entropy(fwd.source_class_logits, batch.source_class_labels);
  const std::vector<int> dom_labels = domain_labels(fwd.n_source, fwd.n_target);
  nn::XentResult domain_xent = nn::softmax_cross_entropy(fwd.domain_logits, dom_labels);

  const Tensor source_feat_grad =
      model.source_head.backward(fwd.source_trace, source_xent.grad_logits);
  const Tensor domain_feat_grad =
      model.domain_head.backward(fwd.domain_trace, domain_xent.grad_logits);
  backprop_feature(model, fwd, source_feat_grad, domain_feat_grad, lambda);

  nn::sgd_step(model.feature.params(), config);
  nn::sgd_step(model.source_head.params(), config);
  nn::sgd_step(model.domain_head.params(), config);

  StepOutcome out;
  out.loss.l_source = source_xent.loss;
  out.loss.l_domain = domain_xent.loss;
  out.loss.l_total = source_xent.loss + domain_xent.loss;
  out.source_correct = count_correct(fwd.source_class_logits, batch.source_class_labels);
  out.domain_correct = count_correct(fwd.domain_logits, dom_labels);
  out.domain_total = dom_labels.size();
  return out;
}

// Source-only step: no domain head involvement at all.
StepOutcome step_source_only(DannModel& model, const Tensor& images,
                             const std::vector<int>& labels, const nn::TrainConfig& config) {
  nn::Network::Trace feature_trace, head_trace;
  const Tensor features = model.feature.forward(images, feature_trace);
  const Tensor logits = model.source_head.forward(features, head_trace);
  nn::XentResult xent = nn::softmax_cross_entropy(logits, labels);
  const Tensor feat_grad = model.source_head.backward(head_trace, xent.grad_logits);
  model.feature.backward(feature_trace, feat_grad);
  nn::sgd_step(model.feature.params(), config);
  nn::sgd_step(model.source_head.params(), config);

  StepOutcome out;
  out.loss.l_source = xent.loss;
  out.loss.l_domain = 0.0;
  out.loss.l_total = xent.loss + 0.0;
  out.source_correct = count_correct(logits, labels);
  return out;
}

}  // namespace

LossBreakdown train_step(DannModel& model, const DomainBatch& batch,
                         const nn::TrainConfig& config, double lambda) {
  config.validate();
  return step_impl(model, batch, config, lambda).loss;
}

double routing_grad_check(DannModel& model, const DomainBatch& batch, double lambda,
                          double epsilon) {
  if (!(lambda >= 0.0)) throw ValueError("routing_grad_check: lambda must be >= 0");
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
    throw ValueError("routing_grad_check: epsilon must lie in [1e-7, 1e-3]");

  auto zero_all = [&] {
    model.feature.params().zero_grads();
    model.source_head.params().zero_grads();
    model.domain_head.params().zero_grads();
  };

  zero_all();
  DannForward fwd = dann_forward(model, batch);
  nn::XentResult source_xent =
      nn::softmax_cross_entropy(fwd.source_class_logits, batch.source_class_labels);
  nn::XentResult domain_xent = nn::softmax_cross_entropy(
      fwd.domain_logits, domain_labels(fwd.n_source, fwd.n_target));
  const Tensor source_feat_grad =
      model.source_head.backward(fwd.source_trace, source_xent.grad_logits);
  const Tensor domain_feat_grad =
      model.domain_head.backward(fwd.domain_trace, domain_xent.grad_logits);
  backprop_feature(model, fwd, source_feat_grad, domain_feat_grad, lambda);

  // The reversal makes the feature extractor descend l_source - lambda *
  // l_domain; central differences of that objective are the reference.
  auto objective = [&]() {
    DannForward f = dann_forward(model, batch);
    const LossBreakdown l = dann_loss(f.source_class_logits, batch.source_class_labels,
                                      f.domain_logits, lambda);
    return l.l_source - lambda * l.l_domain;
  };

  double max_rel = 0.0;
  nn::ParamSet& params = model.feature.params();
  for (std::size_t pi = 0; pi < params.count(); ++pi) {
    nn::ParamTensor& p = params[pi];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + epsilon;
      const double lp = objective();
      p.value[i] = saved - epsilon;
      const double lm = objective();
      p.value[i] = saved;
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double analytic = p.grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      max_rel = std::max(max_rel, rel);
    }
  }
  zero_all();
  return max_rel;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

namespace {

// Shuffled index stream over one dataset; reshuffles with a fresh derived
// seed each time it wraps, so recycled passes see new orders.
class IndexStream {
 public:
  IndexStream(std::size_t n, std::uint64_t base_seed)
      : n_(n), base_seed_(base_seed), order_(n) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    reshuffle();
  }

  // Next chunk of at most `want` indices (at least 1 when n > 0).
  std::vector<std::size_t> take(std::size_t want) {
    if (cursor_ >= n_) {
      ++wraps_;
      reshuffle();
      cursor_ = 0;
    }
    const std::size_t count = std::min(want, n_ - cursor_);
    std::vector<std::size_t> chunk(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                   order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + count));
    cursor_ += count;
    return chunk;
  }

 private:
  void reshuffle() {
    Rng rng(mix_seed(base_seed_, wraps_));
    rng.shuffle(order_);
  }

  std::size_t n_;
  std::uint64_t base_seed_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t wraps_ = 0;
};

Tensor gather_rows(const Tensor& data, const std::vector<std::size_t>& rows) {
  std::vector<std::size_t> shape = data.shape();
  const std::size_t per = data.size() / shape[0];
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::memcpy(out.data() + i * per, data.data() + rows[i] * per, per * sizeof(double));
  return out;
}

void check_source_dataset(const SourceDataset& source) {
  if (source.images.empty() || source.images.dim(0) < 1)
    throw ConfigError("fit: source dataset is empty");
  if (source.labels.size() != source.images.dim(0))
    throw ConfigError("fit: source labels length does not match image count");
  for (int l : source.labels)
    if (l != 0 && l != 1) throw ValueError("fit: source labels must be 0 or 1");
}

}  // namespace

TrainReport fit(DannModel& model, const SourceDataset& source, const TargetDataset& target,
                const nn::TrainConfig& config, const GrlConfig& grl, TrainMode mode,
                const EpochCallback& on_epoch) {
  config.validate();
  check_source_dataset(source);
  const bool adversarial = mode == TrainMode::dann;
  if (adversarial) {
    grl.validate();
    if (target.images.empty() || target.images.dim(0) < 1)
      throw ConfigError("fit: target dataset is empty");
  }

  const std::size_t n_source = source.images.dim(0);
  const std::size_t n_target = adversarial ? target.images.dim(0) : 0;
  const std::size_t driver = std::max(n_source, n_target);
  const std::size_t steps =
      (driver + config.batch_size - 1) / config.batch_size;

  TrainReport report;
  report.epochs.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Streams are decoupled: the source order never depends on whether a
    // target dataset is consumed.
    IndexStream source_stream(n_source, mix_seed(config.seed, epoch, 1));
    IndexStream target_stream(n_target, mix_seed(config.seed, epoch, 2));
    const double progress =
        static_cast<double>(epoch) / static_cast<double>(config.epochs);
    const double lambda = adversarial ? lambda_at(grl, progress) : 0.0;

    LossBreakdown sum;
    std::size_t source_correct = 0, source_seen = 0;
    std::size_t domain_correct = 0, domain_seen = 0;
    for (std::size_t step = 0; step < steps; ++step) {
      const std::vector<std::size_t> src_rows = source_stream.take(config.batch_size);
      StepOutcome outcome;
      if (adversarial) {
        DomainBatch batch;
        batch.source_images = gather_rows(source.images, src_rows);
        batch.source_class_labels.reserve(src_rows.size());
        for (std::size_t r : src_rows) batch.source_class_labels.push_back(source.labels[r]);
        batch.target_images = gather_rows(target.images, target_stream.take(config.batch_size));
        outcome = step_impl(model, batch, config, lambda);
      } else {
        std::vector<int> labels;
        labels.reserve(src_rows.size());
        for (std::size_t r : src_rows) labels.push_back(source.labels[r]);
        outcome = step_source_only(model, gather_rows(source.images, src_rows), labels, config);
      }
      if (!std::isfinite(outcome.loss.l_total)) {
        throw DivergenceError("fit: non-finite loss at epoch " + std::to_string(epoch) +
                              " step " + std::to_string(step));
      }
      sum.l_source += outcome.loss.l_source;
      sum.l_domain += outcome.loss.l_domain;
      sum.l_total += outcome.loss.l_total;
      source_correct += outcome.source_correct;
      source_seen += src_rows.size();
      domain_correct += outcome.domain_correct;
      domain_seen += outcome.domain_total;
    }

    EpochStats stats;
    stats.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(steps);
    stats.mean_loss = {sum.l_source * inv, sum.l_domain * inv, sum.l_total * inv};
    stats.source_accuracy =
        static_cast<double>(source_correct) / static_cast<double>(source_seen);
    stats.domain_accuracy =
        domain_seen ? static_cast<double>(domain_correct) / static_cast<double>(domain_seen)
                    : 0.0;
    stats.lambda = lambda;
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats, model);
  }
  return report;
}

namespace {

std::vector<int> predict_with_head(const DannModel& model, const nn::Network& head,
                                   const Tensor& images) {
  const std::size_t n = images.empty() ? 0 : images.dim(0);
  std::vector<int> labels;
  labels.reserve(n);
  const std::size_t chunk = 128;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t count = std::min(chunk, n - start);
    rows.resize(count);
    std::iota(rows.begin(), rows.end(), start);
    const Tensor batch = gather_rows(images, rows);
    const Tensor logits = head.forward(model.feature.forward(batch));
    for (std::size_t r = 0; r < count; ++r) {
      const double* row = logits.data() + r * logits.dim(1);
      std::size_t arg = 0;
      for (std::size_t c = 1; c < logits.dim(1); ++c)
        if (row[c] > row[arg]) arg = c;  // strict: ties keep the lowest index
      labels.push_back(static_cast<int>(arg));
    }
  }
  return labels;
}

}  // namespace

std::vector<int> predict(const DannModel& model, const Tensor& images) {
  return predict_with_head(model, model.source_head, images);
}

std::vector<int> predict_domain(const DannModel& model, const Tensor& images) {
  return predict_with_head(model, model.domain_head, images);
}

}  // namespace grlforge::dann
