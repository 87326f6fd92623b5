#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "grlforge/tensor.hpp"

namespace grlforge::nn {

// ---------------------------------------------------------------------------
// Layer kernels. All are pure functions; backward passes return exact
// gradients of the forward definitions.
// ---------------------------------------------------------------------------

/// x [B x I] * w [I x O] + b [O] -> [B x O]
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct LinearGrads {
  Tensor x;  // grad_out * w^T
  Tensor w;  // x^T * grad_out
  Tensor b;  // column sums of grad_out
};
LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out);

/// Cross-correlation with zero padding.
/// x [B x C x H x W], kernels [K x C x kh x kw], bias [K] -> [B x K x H' x W']
/// where H' = (H + 2*padding - kh)/stride + 1 must be a positive integer.
Tensor conv2d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias,
                      std::size_t stride, std::size_t padding);

struct ConvGrads {
  Tensor x;
  Tensor kernels;
  Tensor bias;
};
ConvGrads conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& grad_out,
                          std::size_t stride, std::size_t padding);

/// max(0, x) elementwise. Backward passes gradient where x > 0; the
/// subgradient at exactly 0 is 0.
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

struct PoolResult {
  Tensor out;
  // Flat index into the input tensor of the winning element, one per
  // output element, in output row-major order. Ties go to the first
  // position in row-major window order.
  std::vector<std::size_t> argmax;
};
PoolResult maxpool2d(const Tensor& x, std::size_t window, std::size_t stride);
Tensor maxpool2d_backward(const std::vector<std::size_t>& argmax, const Tensor& grad_out,
                          const std::vector<std::size_t>& input_shape);

struct XentResult {
  double loss;         // mean negative log-likelihood over the batch
  Tensor grad_logits;  // (softmax - onehot) / B
};
/// Softmax cross-entropy with max-subtraction for stability.
/// logits [B x C], labels in [0, C).
XentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Layer specs and networks
// ---------------------------------------------------------------------------

struct LinearSpec {
  std::size_t in = 0, out = 0;
};
struct Conv2dSpec {
  std::size_t in_channels = 0, out_channels = 0;
  std::size_t kernel = 0, stride = 1, padding = 0;
};
struct ReluSpec {};
struct MaxPoolSpec {
  std::size_t window = 0, stride = 0;
};
struct FlattenSpec {};

using LayerSpec = std::variant<LinearSpec, Conv2dSpec, ReluSpec, MaxPoolSpec, FlattenSpec>;

std::string layer_kind_name(const LayerSpec& spec);

/// Per-sample output dims of one layer given per-sample input dims.
/// Throws ConfigError when the spec does not accept the input shape.
std::vector<std::size_t> layer_output_dims(const LayerSpec& spec,
                                           const std::vector<std::size_t>& in_dims);

struct ParamTensor {
  std::string name;
  Tensor value;
  Tensor grad;      // same shape as value
  Tensor momentum;  // same shape as value
};

class ParamSet {
 public:
  std::size_t add(std::string name, Tensor value);
  std::size_t count() const { return items_.size(); }
  ParamTensor& operator[](std::size_t i) { return items_[i]; }
  const ParamTensor& operator[](std::size_t i) const { return items_[i]; }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  void zero_grads();
  std::size_t scalar_count() const;

 private:
  std::vector<ParamTensor> items_;
};

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;       // in [0, 1)
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError on out-of-range fields
};

/// Momentum SGD: v <- mu*v + g; p <- p - lr*v; gradients are zeroed.
void sgd_step(ParamSet& params, const TrainConfig& config);

/// A feed-forward chain of layers with its parameters. Shape compatibility
/// between consecutive layers is checked at construction. Parameters start
/// at zero; call init_glorot to fill them.
class Network {
 public:
  Network() = default;
  Network(std::vector<LayerSpec> specs, std::vector<std::size_t> input_dims);

  /// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero, drawn in
  /// layer order from one seeded generator.
  void init_glorot(std::uint64_t seed);

  struct Trace {
    std::vector<Tensor> inputs;                       // input to each layer
    std::vector<std::vector<std::size_t>> pool_idx;   // argmax per pool layer
    /// Restricts every cached tensor to its first `rows` batch rows.
    Trace first_rows(std::size_t rows) const;
  };

  Tensor forward(const Tensor& x) const;
  Tensor forward(const Tensor& x, Trace& trace) const;

  /// Accumulates parameter gradients (+=) and returns the gradient with
  /// respect to the network input.
  Tensor backward(const Trace& trace, const Tensor& grad_out);

  const std::vector<LayerSpec>& specs() const { return specs_; }
  const std::vector<std::size_t>& input_dims() const { return input_dims_; }
  const std::vector<std::size_t>& output_dims() const { return output_dims_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  std::vector<LayerSpec> specs_;
  std::vector<std::size_t> input_dims_;
  std::vector<std::size_t> output_dims_;
  // Index into params_ of the first parameter of each layer, or npos.
  std::vector<std::size_t> param_index_;
  ParamSet params_;
};

/// Max over all parameters of |analytic - central difference| /
/// max(1, |analytic|, |numeric|) for the scalar loss
/// softmax_cross_entropy(net(x), labels). A network with no parameters
/// returns 0. `inject` is a fault-injection hook: it is added to every
/// analytic gradient before comparison, so a nonzero value must fail.
double grad_check(Network& net, const Tensor& input, const std::vector<int>& labels,
                  double epsilon, double inject = 0.0);

}  // namespace grlforge::nn
