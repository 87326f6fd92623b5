#pragma once

#include <cmath>
#include <vector>

#include "grlforge/rng.hpp"
#include "grlforge/tensor.hpp"

namespace testutil {

using grlforge::Rng;
using grlforge::Tensor;

inline Tensor random_tensor(const std::vector<std::size_t>& shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t classes, Rng& rng) {
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.index(classes));
  return labels;
}

// Plain triple loop, the reference for linear_forward.
inline Tensor naive_linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t rows = x.dim(0), in = x.dim(1), out = w.dim(1);
  Tensor y({rows, out});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < out; ++c) {
      double acc = b[c];
      for (std::size_t i = 0; i < in; ++i) acc += x[r * in + i] * w[i * out + c];
      y[r * out + c] = acc;
    }
  return y;
}

// Six nested loops over the cross-correlation definition, zero padding.
inline Tensor naive_conv2d(const Tensor& x, const Tensor& k, const Tensor& bias,
                           std::size_t stride, std::size_t padding) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (H + 2 * padding - kh) / stride + 1;
  const std::size_t ow = (W + 2 * padding - kw) / stride + 1;
  Tensor y({B, K, oh, ow});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < K; ++f)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = bias[f];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long r = static_cast<long>(i * stride + u) - static_cast<long>(padding);
                const long s = static_cast<long>(j * stride + v) - static_cast<long>(padding);
                if (r < 0 || s < 0 || r >= static_cast<long>(H) || s >= static_cast<long>(W))
                  continue;
                acc += x.at4(b, c, static_cast<std::size_t>(r), static_cast<std::size_t>(s)) *
                       k.at4(f, c, u, v);
              }
          y.at4(b, f, i, j) = acc;
        }
  return y;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace testutil
