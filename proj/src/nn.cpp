#include "grlforge/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "grlforge/errors.hpp"
#include "grlforge/rng.hpp"

namespace grlforge::nn {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* arg) {
  if (t.rank() != rank) {
    std::ostringstream msg;
    msg << op << ": " << arg << " must have rank " << rank << ", got " << t.shape_str();
    throw ShapeError(msg.str());
  }
}

[[noreturn]] void dim_mismatch(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

}  // namespace

// ---------------------------------------------------------------------------
// linear
// ---------------------------------------------------------------------------

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 2, "linear_forward", "x");
  require_rank(w, 2, "linear_forward", "w");
  require_rank(b, 1, "linear_forward", "b");
  const std::size_t rows = x.dim(0), in = x.dim(1), out = w.dim(1);
  if (w.dim(0) != in)
    dim_mismatch("linear_forward", "x columns " + std::to_string(in) + " != w rows " +
                                       std::to_string(w.dim(0)));
  if (b.dim(0) != out)
    dim_mismatch("linear_forward", "bias length " + std::to_string(b.dim(0)) +
                                       " != w columns " + std::to_string(out));

  Tensor y({rows, out});
  const double* xp = x.data();
  const double* wp = w.data();
  double* yp = y.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = yp + r * out;
    for (std::size_t c = 0; c < out; ++c) yr[c] = b[c];
    const double* xr = xp + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const double xv = xr[i];
      const double* wr = wp + i * out;
      for (std::size_t c = 0; c < out; ++c) yr[c] += xv * wr[c];
    }
  }
  return y;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out) {
  require_rank(x, 2, "linear_backward", "x");
  require_rank(w, 2, "linear_backward", "w");
  require_rank(grad_out, 2, "linear_backward", "grad_out");
  const std::size_t rows = x.dim(0), in = x.dim(1), out = w.dim(1);
  if (w.dim(0) != in)
    dim_mismatch("linear_backward", "x columns " + std::to_string(in) + " != w rows " +
                                        std::to_string(w.dim(0)));
  if (grad_out.dim(0) != rows || grad_out.dim(1) != out)
    dim_mismatch("linear_backward", "grad_out " + grad_out.shape_str() + " != expected [" +
                                        std::to_string(rows) + " x " + std::to_string(out) + "]");

  LinearGrads g{Tensor({rows, in}), Tensor({in, out}), Tensor({out})};
  const double* xp = x.data();
  const double* wp = w.data();
  const double* gp = grad_out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* gr = gp + r * out;
    double* gxr = g.x.data() + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const double* wr = wp + i * out;
      double acc = 0.0;
      for (std::size_t c = 0; c < out; ++c) acc += gr[c] * wr[c];
      gxr[i] = acc;
    }
    const double* xr = xp + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const double xv = xr[i];
      double* gwr = g.w.data() + i * out;
      for (std::size_t c = 0; c < out; ++c) gwr[c] += xv * gr[c];
    }
    for (std::size_t c = 0; c < out; ++c) g.b[c] += gr[c];
  }
  return g;
}

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

namespace {

std::size_t conv_out_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                            std::size_t padding, const char* axis) {
  const std::size_t padded = extent + 2 * padding;
  if (padded < kernel || (padded - kernel) % stride != 0) {
    std::ostringstream msg;
    msg << "conv2d: kernel " << kernel << " stride " << stride << " padding " << padding
        << " does not produce an integral output size along " << axis << " (input "
        << extent << ")";
    throw ConfigError(msg.str());
  }
  return (padded - kernel) / stride + 1;
}

void check_conv_args(const Tensor& x, const Tensor& kernels, std::size_t stride) {
  require_rank(x, 4, "conv2d", "x");
  require_rank(kernels, 4, "conv2d", "kernels");
  if (stride == 0) throw ConfigError("conv2d: stride must be >= 1");
  if (kernels.dim(1) != x.dim(1))
    dim_mismatch("conv2d", "input channels " + std::to_string(x.dim(1)) +
                               " != kernel channels " + std::to_string(kernels.dim(1)));
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias,
                      std::size_t stride, std::size_t padding) {
  check_conv_args(x, kernels, stride);
  require_rank(bias, 1, "conv2d_forward", "bias");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t nk = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  if (bias.dim(0) != nk)
    dim_mismatch("conv2d_forward", "bias length " + std::to_string(bias.dim(0)) +
                                       " != kernel count " + std::to_string(nk));
  const std::size_t oh = conv_out_extent(h, kh, stride, padding, "height");
  const std::size_t ow = conv_out_extent(w, kw, stride, padding, "width");

  Tensor y({batch, nk, oh, ow});
  const long pad = static_cast<long>(padding);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.data() + b * ch * h * w;
    for (std::size_t k = 0; k < nk; ++k) {
      const double* kk = kernels.data() + k * ch * kh * kw;
      double* yk = y.data() + (b * nk + k) * oh * ow;
      const double bk = bias[k];
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = bk;
          const long base_r = static_cast<long>(i * stride) - pad;
          const long base_c = static_cast<long>(j * stride) - pad;
          for (std::size_t c = 0; c < ch; ++c) {
            const double* xc = xb + c * h * w;
            const double* kc = kk + c * kh * kw;
            for (std::size_t u = 0; u < kh; ++u) {
              const long r = base_r + static_cast<long>(u);
              if (r < 0 || r >= static_cast<long>(h)) continue;
              const double* xrow = xc + static_cast<std::size_t>(r) * w;
              const double* krow = kc + u * kw;
              for (std::size_t v = 0; v < kw; ++v) {
                const long cc = base_c + static_cast<long>(v);
                if (cc < 0 || cc >= static_cast<long>(w)) continue;
                acc += xrow[static_cast<std::size_t>(cc)] * krow[v];
              }
            }
          }
          yk[i * ow + j] = acc;
        }
      }
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& grad_out,
                          std::size_t stride, std::size_t padding) {
  check_conv_args(x, kernels, stride);
  require_rank(grad_out, 4, "conv2d_backward", "grad_out");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t nk = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const std::size_t oh = conv_out_extent(h, kh, stride, padding, "height");
  const std::size_t ow = conv_out_extent(w, kw, stride, padding, "width");
  if (grad_out.dim(0) != batch || grad_out.dim(1) != nk || grad_out.dim(2) != oh ||
      grad_out.dim(3) != ow) {
    dim_mismatch("conv2d_backward",
                 "grad_out " + grad_out.shape_str() + " != expected [" + std::to_string(batch) +
                     " x " + std::to_string(nk) + " x " + std::to_string(oh) + " x " +
                     std::to_string(ow) + "]");
  }

  ConvGrads g{Tensor({batch, ch, h, w}), Tensor({nk, ch, kh, kw}), Tensor({nk})};
  const long pad = static_cast<long>(padding);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.data() + b * ch * h * w;
    double* gxb = g.x.data() + b * ch * h * w;
    for (std::size_t k = 0; k < nk; ++k) {
      const double* kk = kernels.data() + k * ch * kh * kw;
      double* gkk = g.kernels.data() + k * ch * kh * kw;
      const double* gyk = grad_out.data() + (b * nk + k) * oh * ow;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          const double gy = gyk[i * ow + j];
          g.bias[k] += gy;
          if (gy == 0.0) continue;
          const long base_r = static_cast<long>(i * stride) - pad;
          const long base_c = static_cast<long>(j * stride) - pad;
          for (std::size_t c = 0; c < ch; ++c) {
            const double* xc = xb + c * h * w;
            double* gxc = gxb + c * h * w;
            const double* kc = kk + c * kh * kw;
            double* gkc = gkk + c * kh * kw;
            for (std::size_t u = 0; u < kh; ++u) {
              const long r = base_r + static_cast<long>(u);
              if (r < 0 || r >= static_cast<long>(h)) continue;
              const std::size_t row = static_cast<std::size_t>(r) * w;
              for (std::size_t v = 0; v < kw; ++v) {
                const long cc = base_c + static_cast<long>(v);
                if (cc < 0 || cc >= static_cast<long>(w)) continue;
                const std::size_t col = static_cast<std::size_t>(cc);
                gkc[u * kw + v] += gy * xc[row + col];
                gxc[row + col] += gy * kc[u * kw + v];
              }
            }
          }
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// relu / maxpool
// ---------------------------------------------------------------------------

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (!x.same_shape(grad_out))
    dim_mismatch("relu_backward",
                 "x " + x.shape_str() + " != grad_out " + grad_out.shape_str());
  Tensor g = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
  return g;
}

PoolResult maxpool2d(const Tensor& x, std::size_t window, std::size_t stride) {
  require_rank(x, 4, "maxpool2d", "x");
  if (window == 0 || stride == 0) throw ConfigError("maxpool2d: window and stride must be >= 1");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  auto pooled = [&](std::size_t extent, const char* axis) {
    if (extent < window || (extent - window) % stride != 0) {
      std::ostringstream msg;
      msg << "maxpool2d: window " << window << " stride " << stride
          << " does not produce an integral pooled size along " << axis << " (input " << extent
          << ")";
      throw ConfigError(msg.str());
    }
    return (extent - window) / stride + 1;
  };
  const std::size_t oh = pooled(h, "height");
  const std::size_t ow = pooled(w, "width");

  PoolResult res{Tensor({batch, ch, oh, ow}), {}};
  res.argmax.resize(batch * ch * oh * ow);
  std::size_t o = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double* plane = x.data() + (b * ch + c) * h * w;
      const std::size_t plane_off = (b * ch + c) * h * w;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j, ++o) {
          const std::size_t r0 = i * stride, c0 = j * stride;
          double best = plane[r0 * w + c0];
          std::size_t best_idx = r0 * w + c0;
          for (std::size_t u = 0; u < window; ++u) {
            const std::size_t row = (r0 + u) * w;
            for (std::size_t v = 0; v < window; ++v) {
              const double val = plane[row + c0 + v];
              if (val > best) {  // strict: ties keep first row-major position
                best = val;
                best_idx = row + c0 + v;
              }
            }
          }
          res.out[o] = best;
          res.argmax[o] = plane_off + best_idx;
        }
      }
    }
  }
  return res;
}

Tensor maxpool2d_backward(const std::vector<std::size_t>& argmax, const Tensor& grad_out,
                          const std::vector<std::size_t>& input_shape) {
  if (argmax.size() != grad_out.size())
    dim_mismatch("maxpool2d_backward", "argmax length " + std::to_string(argmax.size()) +
                                           " != grad_out elements " +
                                           std::to_string(grad_out.size()));
  Tensor g(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) {
    if (argmax[o] >= g.size())
      dim_mismatch("maxpool2d_backward", "argmax index out of range for input shape");
    g[argmax[o]] += grad_out[o];
  }
  return g;
}

// ---------------------------------------------------------------------------
// softmax cross-entropy
// ---------------------------------------------------------------------------

XentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require_rank(logits, 2, "softmax_cross_entropy", "logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch)
    dim_mismatch("softmax_cross_entropy", "labels length " + std::to_string(labels.size()) +
                                              " != batch " + std::to_string(batch));
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= classes) {
      throw ValueError("softmax_cross_entropy: label " + std::to_string(labels[b]) +
                       " at row " + std::to_string(b) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
  }

  XentResult res{0.0, Tensor({batch, classes})};
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = logits.data() + b * classes;
    double* grow = res.grad_logits.data() + b * classes;
    const double m = *std::max_element(row, row + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - m);
    const double log_sum = std::log(sum);
    const std::size_t y = static_cast<std::size_t>(labels[b]);
    res.loss += -(row[y] - m - log_sum) * inv_b;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(row[c] - m) / sum;
      grow[c] = (p - (c == y ? 1.0 : 0.0)) * inv_b;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// ParamSet / optimizer
// ---------------------------------------------------------------------------

std::size_t ParamSet::add(std::string name, Tensor value) {
  ParamTensor p;
  p.name = std::move(name);
  p.grad = Tensor::zeros_like(value);
  p.momentum = Tensor::zeros_like(value);
  p.value = std::move(value);
  items_.push_back(std::move(p));
  return items_.size() - 1;
}

void ParamSet::zero_grads() {
  for (auto& p : items_)
    std::fill(p.grad.values().begin(), p.grad.values().end(), 0.0);
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.value.size();
  return n;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("TrainConfig: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("TrainConfig: momentum must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch size must be >= 1");
  if (epochs < 1) throw ConfigError("TrainConfig: epoch count must be >= 1");
}

void sgd_step(ParamSet& params, const TrainConfig& config) {
  for (auto& p : params) {
    double* v = p.momentum.data();
    double* g = p.grad.data();
    double* w = p.value.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      v[i] = config.momentum * v[i] + g[i];
      w[i] -= config.lr * v[i];
      g[i] = 0.0;
    }
  }
}

// ---------------------------------------------------------------------------
// LayerSpec / Network
// ---------------------------------------------------------------------------

std::string layer_kind_name(const LayerSpec& spec) {
  struct Visitor {
    std::string operator()(const LinearSpec&) const { return "linear"; }
    std::string operator()(const Conv2dSpec&) const { return "conv2d"; }
    std::string operator()(const ReluSpec&) const { return "relu"; }
    std::string operator()(const MaxPoolSpec&) const { return "maxpool"; }
    std::string operator()(const FlattenSpec&) const { return "flatten"; }
  };
  return std::visit(Visitor{}, spec);
}

std::vector<std::size_t> layer_output_dims(const LayerSpec& spec,
                                           const std::vector<std::size_t>& in) {
  if (const auto* lin = std::get_if<LinearSpec>(&spec)) {
    if (lin->in < 1 || lin->out < 1) throw ConfigError("linear: widths must be >= 1");
    if (in.size() != 1 || in[0] != lin->in) {
      throw ConfigError("linear(in=" + std::to_string(lin->in) +
                        "): incompatible input width " +
                        (in.size() == 1 ? std::to_string(in[0]) : "(rank != 1)"));
    }
    return {lin->out};
  }
  if (const auto* conv = std::get_if<Conv2dSpec>(&spec)) {
    if (conv->kernel < 1 || conv->stride < 1 || conv->in_channels < 1 ||
        conv->out_channels < 1)
      throw ConfigError("conv2d: kernel, stride and channel counts must be >= 1");
    if (in.size() != 3 || in[0] != conv->in_channels)
      throw ConfigError("conv2d(in_channels=" + std::to_string(conv->in_channels) +
                        "): incompatible input shape");
    const std::size_t oh =
        conv_out_extent(in[1], conv->kernel, conv->stride, conv->padding, "height");
    const std::size_t ow =
        conv_out_extent(in[2], conv->kernel, conv->stride, conv->padding, "width");
    return {conv->out_channels, oh, ow};
  }
  if (std::holds_alternative<ReluSpec>(spec)) return in;
  if (const auto* pool = std::get_if<MaxPoolSpec>(&spec)) {
    if (pool->window < 1 || pool->stride < 1)
      throw ConfigError("maxpool: window and stride must be >= 1");
    if (in.size() != 3) throw ConfigError("maxpool: input must be C x H x W");
    auto pooled = [&](std::size_t extent) {
      if (extent < pool->window || (extent - pool->window) % pool->stride != 0)
        throw ConfigError("maxpool(window=" + std::to_string(pool->window) + ", stride=" +
                          std::to_string(pool->stride) + "): non-integral pooled size for " +
                          std::to_string(extent));
      return (extent - pool->window) / pool->stride + 1;
    };
    return {in[0], pooled(in[1]), pooled(in[2])};
  }
  // flatten
  std::size_t n = 1;
  for (std::size_t d : in) n *= d;
  return {n};
}

Network::Network(std::vector<LayerSpec> specs, std::vector<std::size_t> input_dims)
    : specs_(std::move(specs)), input_dims_(std::move(input_dims)) {
  checked_element_count(input_dims_);
  std::vector<std::size_t> dims = input_dims_;
  param_index_.assign(specs_.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    dims = layer_output_dims(specs_[i], dims);
    const std::string prefix = "layer" + std::to_string(i);
    if (const auto* lin = std::get_if<LinearSpec>(&specs_[i])) {
      param_index_[i] = params_.add(prefix + ".w", Tensor({lin->in, lin->out}));
      params_.add(prefix + ".b", Tensor({lin->out}));
    } else if (const auto* conv = std::get_if<Conv2dSpec>(&specs_[i])) {
      param_index_[i] = params_.add(
          prefix + ".k",
          Tensor({conv->out_channels, conv->in_channels, conv->kernel, conv->kernel}));
      params_.add(prefix + ".b", Tensor({conv->out_channels}));
    }
  }
  output_dims_ = dims;
}

void Network::init_glorot(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (param_index_[i] == static_cast<std::size_t>(-1)) continue;
    Tensor& w = params_[param_index_[i]].value;
    double fan_in = 0, fan_out = 0;
    if (const auto* lin = std::get_if<LinearSpec>(&specs_[i])) {
      fan_in = static_cast<double>(lin->in);
      fan_out = static_cast<double>(lin->out);
    } else {
      const auto& conv = std::get<Conv2dSpec>(specs_[i]);
      fan_in = static_cast<double>(conv.in_channels * conv.kernel * conv.kernel);
      fan_out = static_cast<double>(conv.out_channels * conv.kernel * conv.kernel);
    }
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w.values()) v = rng.uniform(-a, a);
    // biases stay zero
  }
}

Network::Trace Network::Trace::first_rows(std::size_t rows) const {
  Trace out;
  out.inputs.reserve(inputs.size());
  const std::size_t batch = inputs.empty() ? 0 : inputs[0].dim(0);
  for (const Tensor& t : inputs) out.inputs.push_back(t.first_rows(rows));
  out.pool_idx.resize(pool_idx.size());
  for (std::size_t i = 0; i < pool_idx.size(); ++i) {
    if (pool_idx[i].empty()) continue;
    const std::size_t per_sample = pool_idx[i].size() / batch;
    out.pool_idx[i].assign(pool_idx[i].begin(),
                           pool_idx[i].begin() + static_cast<std::ptrdiff_t>(rows * per_sample));
  }
  return out;
}

Tensor Network::forward(const Tensor& x) const {
  Trace t;
  return forward(x, t);
}

Tensor Network::forward(const Tensor& x, Trace& trace) const {
  if (x.rank() != input_dims_.size() + 1 ||
      !std::equal(input_dims_.begin(), input_dims_.end(), x.shape().begin() + 1)) {
    throw ShapeError("network: input " + x.shape_str() + " does not match expected per-sample " +
                     Tensor(input_dims_).shape_str());
  }
  trace.inputs.clear();
  trace.pool_idx.assign(specs_.size(), {});
  Tensor cur = x;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    trace.inputs.push_back(cur);
    if (const auto* lin = std::get_if<LinearSpec>(&specs_[i])) {
      (void)lin;
      cur = linear_forward(cur, params_[param_index_[i]].value,
                           params_[param_index_[i] + 1].value);
    } else if (const auto* conv = std::get_if<Conv2dSpec>(&specs_[i])) {
      cur = conv2d_forward(cur, params_[param_index_[i]].value,
                           params_[param_index_[i] + 1].value, conv->stride, conv->padding);
    } else if (std::holds_alternative<ReluSpec>(specs_[i])) {
      cur = relu(cur);
    } else if (const auto* pool = std::get_if<MaxPoolSpec>(&specs_[i])) {
      PoolResult res = maxpool2d(cur, pool->window, pool->stride);
      trace.pool_idx[i] = std::move(res.argmax);
      cur = std::move(res.out);
    } else {  // flatten
      std::size_t per = cur.size() / cur.dim(0);
      cur = cur.reshaped({cur.dim(0), per});
    }
  }
  return cur;
}

Tensor Network::backward(const Trace& trace, const Tensor& grad_out) {
  if (trace.inputs.size() != specs_.size())
    throw ShapeError("network backward: trace does not match network depth");
  Tensor grad = grad_out;
  for (std::size_t ri = specs_.size(); ri-- > 0;) {
    const Tensor& in = trace.inputs[ri];
    if (std::holds_alternative<LinearSpec>(specs_[ri])) {
      ParamTensor& w = params_[param_index_[ri]];
      ParamTensor& b = params_[param_index_[ri] + 1];
      LinearGrads g = linear_backward(in, w.value, grad);
      for (std::size_t i = 0; i < g.w.size(); ++i) w.grad[i] += g.w[i];
      for (std::size_t i = 0; i < g.b.size(); ++i) b.grad[i] += g.b[i];
      grad = std::move(g.x);
    } else if (const auto* conv = std::get_if<Conv2dSpec>(&specs_[ri])) {
      ParamTensor& k = params_[param_index_[ri]];
      ParamTensor& b = params_[param_index_[ri] + 1];
      ConvGrads g = conv2d_backward(in, k.value, grad, conv->stride, conv->padding);
      for (std::size_t i = 0; i < g.kernels.size(); ++i) k.grad[i] += g.kernels[i];
      for (std::size_t i = 0; i < g.bias.size(); ++i) b.grad[i] += g.bias[i];
      grad = std::move(g.x);
    } else if (std::holds_alternative<ReluSpec>(specs_[ri])) {
      grad = relu_backward(in, grad);
    } else if (std::holds_alternative<MaxPoolSpec>(specs_[ri])) {
      grad = maxpool2d_backward(trace.pool_idx[ri], grad, in.shape());
    } else {  // flatten
      grad = grad.reshaped(in.shape());
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// gradient checker
// ---------------------------------------------------------------------------

double grad_check(Network& net, const Tensor& input, const std::vector<int>& labels,
                  double epsilon, double inject) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
    throw ValueError("grad_check: epsilon must lie in [1e-7, 1e-3]");
  if (net.params().scalar_count() == 0) return 0.0;

  net.params().zero_grads();
  Network::Trace trace;
  Tensor out = net.forward(input, trace);
  XentResult xent = softmax_cross_entropy(out, labels);
  net.backward(trace, xent.grad_logits);

  auto loss_at = [&]() {
    return softmax_cross_entropy(net.forward(input), labels).loss;
  };

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < net.params().count(); ++pi) {
    ParamTensor& p = net.params()[pi];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + epsilon;
      const double lp = loss_at();
      p.value[i] = saved - epsilon;
      const double lm = loss_at();
      p.value[i] = saved;
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double analytic = p.grad[i] + inject;
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      max_rel = std::max(max_rel, rel);
    }
  }
  net.params().zero_grads();
  return max_rel;
}

}  // namespace grlforge::nn
