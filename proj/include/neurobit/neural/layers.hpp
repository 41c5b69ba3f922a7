#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "neurobit/neural/rng.hpp"
#include "neurobit/tensor.hpp"

namespace neurobit::nn {

// ---------------------------------------------------------------------------
// conv2d: same padding, stride 1, 3x3 kernels. Input [H,W,Cin], kernels
// [3,3,Cin,Cout], output [H,W,Cout]. Channel-last layout so the Cout loop
// vectorizes.
// ---------------------------------------------------------------------------

template <typename T>
void conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernels,
                    const std::vector<T>& bias, Tensor<T>& output) {
  const std::size_t h = input.extent(0), w = input.extent(1), cin = input.extent(2);
  if (kernels.rank() != 4 || kernels.extent(0) != 3 || kernels.extent(1) != 3 ||
      kernels.extent(2) != cin) {
    throw std::invalid_argument("conv2d: kernel shape mismatch");
  }
  const std::size_t cout = kernels.extent(3);
  if (bias.size() != cout) throw std::invalid_argument("conv2d: bias size mismatch");
  output = Tensor<T>({h, w, cout});

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      T* out = &output.at3(y, x, 0);
      for (std::size_t co = 0; co < cout; ++co) out[co] = bias[co];
      for (int dy = -1; dy <= 1; ++dy) {
        const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + dy;
        if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + dx;
          if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
          const T* in = &input.at3(static_cast<std::size_t>(yy),
                                   static_cast<std::size_t>(xx), 0);
          const T* k = &kernels.at4(static_cast<std::size_t>(dy + 1),
                                    static_cast<std::size_t>(dx + 1), 0, 0);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const T v = in[ci];
            const T* kc = k + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) out[co] += v * kc[co];
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernels,
                     const Tensor<T>& grad_out, Tensor<T>& grad_in,
                     Tensor<T>& grad_kernels, std::vector<T>& grad_bias) {
  const std::size_t h = input.extent(0), w = input.extent(1), cin = input.extent(2);
  const std::size_t cout = kernels.extent(3);
  grad_in = Tensor<T>({h, w, cin});
  if (grad_kernels.shape() != kernels.shape()) grad_kernels = Tensor<T>(kernels.shape());
  else std::fill(grad_kernels.raw().begin(), grad_kernels.raw().end(), T(0));
  grad_bias.assign(cout, T(0));

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const T* go = &grad_out.at3(y, x, 0);
      for (std::size_t co = 0; co < cout; ++co) grad_bias[co] += go[co];
      for (int dy = -1; dy <= 1; ++dy) {
        const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + dy;
        if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + dx;
          if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
          const T* in = &input.at3(static_cast<std::size_t>(yy),
                                   static_cast<std::size_t>(xx), 0);
          T* gi = &grad_in.at3(static_cast<std::size_t>(yy),
                               static_cast<std::size_t>(xx), 0);
          const T* k = &kernels.at4(static_cast<std::size_t>(dy + 1),
                                    static_cast<std::size_t>(dx + 1), 0, 0);
          T* gk = &grad_kernels.at4(static_cast<std::size_t>(dy + 1),
                                    static_cast<std::size_t>(dx + 1), 0, 0);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const T v = in[ci];
            const T* kc = k + ci * cout;
            T* gkc = gk + ci * cout;
            T acc = T(0);
            for (std::size_t co = 0; co < cout; ++co) {
              acc += go[co] * kc[co];
              gkc[co] += go[co] * v;
            }
            gi[ci] += acc;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// batchnorm over rows: input viewed as [M, C] (M = batch x spatial), one
// mean/variance per channel. eps 1e-5, running-stat momentum 0.9.
// ---------------------------------------------------------------------------

template <typename T>
struct BatchNormParams {
  std::vector<T> gamma, beta;
  std::vector<T> running_mean, running_var;

  explicit BatchNormParams(std::size_t channels = 0)
      : gamma(channels, T(1)), beta(channels, T(0)),
        running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

template <typename T>
struct BatchNormCache {
  std::vector<T> mean, inv_std;
  std::vector<T> normalized;  // [M, C]
  std::size_t rows = 0;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

template <typename T>
void batchnorm_forward_train(const std::vector<T>& x, std::size_t channels,
                             BatchNormParams<T>& p, BatchNormCache<T>& cache,
                             std::vector<T>& y) {
  const std::size_t m = x.size() / channels;
  if (m < 2) throw std::invalid_argument("batchnorm: train mode needs batch >= 2");
  cache.rows = m;
  cache.mean.assign(channels, T(0));
  cache.inv_std.assign(channels, T(0));
  std::vector<T> var(channels, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = x.data() + i * channels;
    for (std::size_t c = 0; c < channels; ++c) cache.mean[c] += row[c];
  }
  for (std::size_t c = 0; c < channels; ++c) cache.mean[c] /= static_cast<T>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = x.data() + i * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      const T d = row[c] - cache.mean[c];
      var[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    var[c] /= static_cast<T>(m);
    cache.inv_std[c] = T(1) / std::sqrt(var[c] + static_cast<T>(kBatchNormEps));
    p.running_mean[c] = static_cast<T>(kBatchNormMomentum) * p.running_mean[c] +
                        static_cast<T>(1.0 - kBatchNormMomentum) * cache.mean[c];
    p.running_var[c] = static_cast<T>(kBatchNormMomentum) * p.running_var[c] +
                       static_cast<T>(1.0 - kBatchNormMomentum) * var[c];
  }
  cache.normalized.resize(x.size());
  y.resize(x.size());
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = x.data() + i * channels;
    T* nrow = cache.normalized.data() + i * channels;
    T* yrow = y.data() + i * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      nrow[c] = (row[c] - cache.mean[c]) * cache.inv_std[c];
      yrow[c] = p.gamma[c] * nrow[c] + p.beta[c];
    }
  }
}

template <typename T>
void batchnorm_forward_infer(const std::vector<T>& x, std::size_t channels,
                             const BatchNormParams<T>& p, std::vector<T>& y) {
  const std::size_t m = x.size() / channels;
  y.resize(x.size());
  std::vector<T> inv_std(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    inv_std[c] = T(1) / std::sqrt(p.running_var[c] + static_cast<T>(kBatchNormEps));
  }
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = x.data() + i * channels;
    T* yrow = y.data() + i * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      yrow[c] = p.gamma[c] * (row[c] - p.running_mean[c]) * inv_std[c] + p.beta[c];
    }
  }
}

template <typename T>
void batchnorm_backward(const std::vector<T>& grad_y, std::size_t channels,
                        const BatchNormParams<T>& p, const BatchNormCache<T>& cache,
                        std::vector<T>& grad_x, std::vector<T>& grad_gamma,
                        std::vector<T>& grad_beta) {
  const std::size_t m = cache.rows;
  grad_x.resize(grad_y.size());
  grad_gamma.assign(channels, T(0));
  grad_beta.assign(channels, T(0));
  std::vector<T> sum_dn(channels, T(0));   // sum over rows of dL/dn
  std::vector<T> sum_dnn(channels, T(0));  // sum of dL/dn * n
  for (std::size_t i = 0; i < m; ++i) {
    const T* gy = grad_y.data() + i * channels;
    const T* nr = cache.normalized.data() + i * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      grad_gamma[c] += gy[c] * nr[c];
      grad_beta[c] += gy[c];
      const T dn = gy[c] * p.gamma[c];
      sum_dn[c] += dn;
      sum_dnn[c] += dn * nr[c];
    }
  }
  const T inv_m = T(1) / static_cast<T>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T* gy = grad_y.data() + i * channels;
    const T* nr = cache.normalized.data() + i * channels;
    T* gx = grad_x.data() + i * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      const T dn = gy[c] * p.gamma[c];
      gx[c] = cache.inv_std[c] * (dn - inv_m * sum_dn[c] - inv_m * nr[c] * sum_dnn[c]);
    }
  }
}

// ---------------------------------------------------------------------------
// dense: y = x W + b with W stored [in, out].
// ---------------------------------------------------------------------------

template <typename T>
void dense_forward(const T* x, std::size_t in, const Tensor<T>& w,
                   const std::vector<T>& b, T* y) {
  const std::size_t out = w.extent(1);
  for (std::size_t o = 0; o < out; ++o) y[o] = b[o];
  for (std::size_t i = 0; i < in; ++i) {
    const T v = x[i];
    const T* wrow = &w.at2(i, 0);
    for (std::size_t o = 0; o < out; ++o) y[o] += v * wrow[o];
  }
}

// Accumulates into grad_w / grad_b (caller zeroes per batch); writes grad_x.
template <typename T>
void dense_backward(const T* x, std::size_t in, const Tensor<T>& w,
                    const T* grad_y, T* grad_x, Tensor<T>& grad_w,
                    std::vector<T>& grad_b) {
  const std::size_t out = w.extent(1);
  for (std::size_t o = 0; o < out; ++o) grad_b[o] += grad_y[o];
  for (std::size_t i = 0; i < in; ++i) {
    const T v = x[i];
    const T* wrow = &w.at2(i, 0);
    T* gwrow = &grad_w.at2(i, 0);
    T acc = T(0);
    for (std::size_t o = 0; o < out; ++o) {
      acc += grad_y[o] * wrow[o];
      gwrow[o] += grad_y[o] * v;
    }
    grad_x[i] = acc;
  }
}

// ---------------------------------------------------------------------------
// relu / dropout / softmax cross-entropy
// ---------------------------------------------------------------------------

template <typename T>
void relu_forward(std::vector<T>& x) {
  for (T& v : x) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward(const std::vector<T>& y, std::vector<T>& grad) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] <= T(0)) grad[i] = T(0);
  }
}

// Inverted dropout: kept units scaled by 1/(1-rate) so inference is identity.
template <typename T>
void dropout_mask(std::size_t n, double rate, Rng& rng, std::vector<T>& mask) {
  mask.resize(n);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = rng.uniform() < rate ? T(0) : scale;
  }
}

// probs: softmax(logits); returns mean -log p[label] contribution for one
// example; gradient at the logits is (p - onehot).
template <typename T>
T softmax_xent(const T* logits, std::size_t n, int label, T* probs, T* grad_logits) {
  T max_v = logits[0];
  for (std::size_t i = 1; i < n; ++i) max_v = std::max(max_v, logits[i]);
  T sum = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = std::exp(logits[i] - max_v);
    sum += probs[i];
  }
  for (std::size_t i = 0; i < n; ++i) probs[i] /= sum;
  if (grad_logits) {
    for (std::size_t i = 0; i < n; ++i) grad_logits[i] = probs[i];
    grad_logits[label] -= T(1);
  }
  const T p = std::max(probs[label], static_cast<T>(1e-30));
  return -std::log(p);
}

}  // namespace neurobit::nn
