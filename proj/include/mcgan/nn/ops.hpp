#pragma once

#include <cstddef>
#include <vector>

#include "mcgan/nn/autograd.hpp"

namespace mcgan::nn {

/// Output extent of a convolution along one axis.
constexpr int conv_out_size(int in, int kernel, int stride, int pad) noexcept {
  return (in + 2 * pad - kernel) / stride + 1;
}
constexpr int conv_transpose_out_size(int in, int kernel, int stride, int pad, int output_padding) noexcept {
  return (in - 1) * stride - 2 * pad + kernel + output_padding;
}

// Convolutions take a single (C, H, W) sample. Weights are (Cout, Cin, k, k)
// for conv2d and (Cin, Cout, k, k) for conv_transpose2d; zero padding.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad);

template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad,
                        int output_padding);

/// Per-channel normalization over the spatial extent, no affine parameters.
template <typename T>
Var<T> instance_norm(const Var<T>& x, T eps = T(1e-5));

template <typename T>
Var<T> relu(const Var<T>& x);
template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope);
template <typename T>
Var<T> tanh(const Var<T>& x);
template <typename T>
Var<T> sigmoid(const Var<T>& x);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T factor);

/// Multiplies by a constant tensor of the same shape (dropout masks).
template <typename T>
Var<T> mul_constant(const Var<T>& a, const Tensor<T>& mask);

/// Window-`factor` average pooling; H and W must be divisible by `factor`.
template <typename T>
Var<T> avg_pool(const Var<T>& x, int factor);

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> mean(const Var<T>& x);

/// Sum of scalar vars, left to right.
template <typename T>
Var<T> sum(const std::vector<Var<T>>& terms);

/// -mean(log(clamp(x, eps, 1 - eps))). Increments *clamped per clamped entry.
template <typename T>
Var<T> neg_mean_log(const Var<T>& x, T eps, std::size_t* clamped = nullptr);

/// -mean(log(1 - clamp(x, eps, 1 - eps))).
template <typename T>
Var<T> neg_mean_log1m(const Var<T>& x, T eps, std::size_t* clamped = nullptr);

/// mean(|a - b|); gradient flows to both sides unless one is detached.
template <typename T>
Var<T> l1_mean(const Var<T>& a, const Var<T>& b);

}  // namespace mcgan::nn
