#pragma once

#include <string>
#include <vector>

#include "mcgan/core/rng.hpp"
#include "mcgan/nn/ops.hpp"

namespace mcgan::nn {

template <typename T>
struct NamedParam {
  std::string name;
  Var<T> var;
};

template <typename T>
using ParamList = std::vector<NamedParam<T>>;

template <typename T>
struct Conv2d {
  Var<T> weight;  // (out, in, k, k)
  Var<T> bias;    // (out)
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(int in, int out, int kernel, int stride_, int pad_);

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, weight, bias, stride, pad); }
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

template <typename T>
struct ConvTranspose2d {
  Var<T> weight;  // (in, out, k, k)
  Var<T> bias;
  int stride = 2;
  int pad = 1;
  int output_padding = 1;

  ConvTranspose2d() = default;
  ConvTranspose2d(int in, int out, int kernel, int stride_, int pad_, int output_padding_);

  Var<T> operator()(const Var<T>& x) const { return conv_transpose2d(x, weight, bias, stride, pad, output_padding); }
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

/// conv3x3 -> IN -> ReLU -> [dropout] -> conv3x3 -> IN, plus identity skip.
template <typename T>
struct ResBlock {
  Conv2d<T> conv_a;
  Conv2d<T> conv_b;

  ResBlock() = default;
  explicit ResBlock(int channels) : conv_a(channels, channels, 3, 1, 1), conv_b(channels, channels, 3, 1, 1) {}

  /// `dropout_mask`, when non-null, multiplies the inner activation.
  Var<T> operator()(const Var<T>& x, const Tensor<T>* dropout_mask = nullptr) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
};

/// Draws every weight from N(0, std) and zeroes every bias, in list order.
template <typename T>
void init_gaussian(const ParamList<T>& params, Engine& rng, double stddev);

template <typename T>
void zero_params(const ParamList<T>& params);

/// Deep copy of the values into fresh constant leaves.
template <typename T>
Var<T> clone_constant(const Var<T>& v) {
  return Var<T>::constant(v.value());
}

/// FNV-1a over the raw bytes of all parameter values, in list order.
template <typename T>
std::uint64_t param_checksum(const ParamList<T>& params);

}  // namespace mcgan::nn
