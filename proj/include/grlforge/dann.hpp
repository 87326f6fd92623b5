#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "grlforge/nn.hpp"
#include "grlforge/tensor.hpp"

namespace grlforge::dann {

// ---------------------------------------------------------------------------
// Gradient reversal layer
// ---------------------------------------------------------------------------

struct GrlConfig {
  enum class Mode { constant, annealed };
  Mode mode = Mode::constant;
  double lambda0 = 1.0;  // constant mode
  double gamma = 10.0;   // annealed mode

  void validate() const;
};

/// Identity in the forward pass.
Tensor grl_forward(const Tensor& x);

/// -lambda * grad elementwise; lambda == 0 yields an exactly-zero tensor.
Tensor grl_backward(const Tensor& grad_out, double lambda);

/// constant mode: lambda0. annealed mode: 2/(1+exp(-gamma*p)) - 1.
/// progress must lie in [0, 1].
double lambda_at(const GrlConfig& config, double progress);

// ---------------------------------------------------------------------------
// Two-head model
// ---------------------------------------------------------------------------

/// Shared feature extractor with a source-classification head and a
/// domain-classification head behind the gradient reversal layer.
struct DannModel {
  nn::Network feature;
  nn::Network source_head;
  nn::Network domain_head;
  GrlConfig grl;

  /// Checks head widths: both heads consume the feature width; both heads
  /// emit 2 logits (authentic/forged resp. source/target).
  void validate() const;
};

/// Backbone presets. The preset table is configuration: layer widths for
/// the named backbones plus the two head shapes.
struct DannBuildConfig {
  std::string backbone = "small-cnn";  // "small-cnn" | "mlp"
  std::size_t feature_dim = 64;
  std::size_t domain_hidden = 16;
  GrlConfig grl;
  std::uint64_t init_seed = 0;
};

/// Builds and initializes the two-head model for per-sample input dims
/// (C x H x W for "small-cnn", anything flattenable for "mlp"). The three
/// networks draw from independent seed streams derived from init_seed, so
/// identical seeds give identical feature/source parameters regardless of
/// the domain head.
DannModel build_dann(const std::vector<std::size_t>& input_dims, const DannBuildConfig& config);

/// One zipped training batch. Target samples structurally carry no class
/// labels; domain labels are implicit (source = 0, target = 1).
struct DomainBatch {
  Tensor source_images;
  std::vector<int> source_class_labels;
  Tensor target_images;
};

struct LossBreakdown {
  double l_source = 0.0;
  double l_domain = 0.0;
  double l_total = 0.0;  // always l_source + l_domain
};

struct DannForward {
  Tensor source_class_logits;  // [Bs x 2]
  Tensor domain_logits;        // [(Bs+Bt) x 2]
  // cached activations for the backward pass
  Tensor features;  // [(Bs+Bt) x D]
  nn::Network::Trace feature_trace;
  nn::Network::Trace source_trace;
  nn::Network::Trace domain_trace;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
};

/// Features are computed once per image over the concatenated batch; the
/// source head sees only source rows, the domain head sees all rows through
/// grl_forward.
DannForward dann_forward(const DannModel& model, const DomainBatch& batch);

/// Loss components of the joint objective: an unweighted sum of the source
/// classification loss and the domain classification loss. Domain labels
/// are 0 for the first Bs rows and 1 for the rest. lambda never scales the
/// reported values; it acts only in grl_backward.
LossBreakdown dann_loss(const Tensor& source_logits, const std::vector<int>& source_labels,
                        const Tensor& domain_logits, double lambda);

/// One forward, one backward, one sgd_step on all three parameter groups.
/// Gradient routing: the source head receives d l_source, the domain head
/// receives d l_domain, and the feature extractor receives
/// d l_source + grl_backward(d l_domain through the domain head, lambda).
/// With lambda == 0 the domain contribution to the feature extractor is
/// skipped entirely, so feature/source trajectories match a source-only
/// classifier bit for bit (the domain head still updates).
LossBreakdown train_step(DannModel& model, const DomainBatch& batch,
                         const nn::TrainConfig& config, double lambda);

/// Max relative error between the feature gradients accumulated by the
/// training backward and central finite differences of
/// l_source - lambda * l_domain over the feature parameters. Gradients are
/// zeroed afterwards; parameters are left untouched.
double routing_grad_check(DannModel& model, const DomainBatch& batch, double lambda,
                          double epsilon);

/// Labeled source-domain dataset: images [N x ...], labels in {0, 1}.
struct SourceDataset {
  Tensor images;
  std::vector<int> labels;
};

/// Unlabeled target-domain dataset; class labels are structurally absent.
struct TargetDataset {
  Tensor images;
};

enum class TrainMode {
  dann,         // adversarial two-head training
  source_only,  // domain head detached; baseline classifier
};

struct EpochStats {
  std::size_t epoch = 0;
  LossBreakdown mean_loss;
  double source_accuracy = 0.0;  // over the epoch's source training batches
  double domain_accuracy = 0.0;  // over the epoch's domain logits (0 in source_only)
  double lambda = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
};

using EpochCallback = std::function<void(const EpochStats&, const DannModel&)>;

/// Adversarial training loop. Per epoch: both datasets are shuffled with
/// generators seeded by mix_seed(seed, epoch, stream); batches are zipped
/// with the smaller dataset recycling (reshuffled on wrap) so every epoch
/// covers the larger dataset once; lambda is evaluated at progress
/// p = completed_epochs / total_epochs. Throws DivergenceError when a step
/// loss turns non-finite.
TrainReport fit(DannModel& model, const SourceDataset& source, const TargetDataset& target,
                const nn::TrainConfig& config, const GrlConfig& grl,
                TrainMode mode = TrainMode::dann, const EpochCallback& on_epoch = {});

/// Argmax over source-head logits; ties resolve to the lowest class index.
/// The domain head never participates.
std::vector<int> predict(const DannModel& model, const Tensor& images);

// Domain-head argmax over feature(images); diagnostics only.
std::vector<int> predict_domain(const DannModel& model, const Tensor& images);

}  // namespace grlforge::dann
