#include "mcgan/nn/layers.hpp"

#include <cstring>
#include <string_view>

namespace mcgan::nn {

template <typename T>
Conv2d<T>::Conv2d(int in, int out, int kernel, int stride_, int pad_)
    : weight(Var<T>::leaf(Tensor<T>(Shape{out, in, kernel, kernel}), true)),
      bias(Var<T>::leaf(Tensor<T>(Shape{out}), true)),
      stride(stride_),
      pad(pad_) {}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + "/weight", weight});
  out.push_back({prefix + "/bias", bias});
}

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(int in, int out, int kernel, int stride_, int pad_, int output_padding_)
    : weight(Var<T>::leaf(Tensor<T>(Shape{in, out, kernel, kernel}), true)),
      bias(Var<T>::leaf(Tensor<T>(Shape{out}), true)),
      stride(stride_),
      pad(pad_),
      output_padding(output_padding_) {}

template <typename T>
void ConvTranspose2d<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + "/weight", weight});
  out.push_back({prefix + "/bias", bias});
}

template <typename T>
Var<T> ResBlock<T>::operator()(const Var<T>& x, const Tensor<T>* dropout_mask) const {
  Var<T> h = relu(instance_norm(conv_a(x)));
  if (dropout_mask) h = mul_constant(h, *dropout_mask);
  h = instance_norm(conv_b(h));
  return add(x, h);
}

template <typename T>
void ResBlock<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  conv_a.collect(prefix + "/conv_a", out);
  conv_b.collect(prefix + "/conv_b", out);
}

namespace {
bool is_bias(const std::string& name) {
  constexpr std::string_view suffix = "/bias";
  return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

template <typename T>
void init_gaussian(const ParamList<T>& params, Engine& rng, double stddev) {
  for (const auto& p : params) {
    Var<T> v = p.var;
    auto& values = v.mutable_value();
    if (is_bias(p.name)) {
      values.fill(T(0));
      continue;
    }
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& x : values.storage()) x = static_cast<T>(dist(rng));
  }
}

template <typename T>
void zero_params(const ParamList<T>& params) {
  for (const auto& p : params) {
    Var<T> v = p.var;
    v.mutable_value().fill(T(0));
  }
}

template <typename T>
std::uint64_t param_checksum(const ParamList<T>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params) {
    const auto& t = p.var.value();
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(T)), h);
  }
  return h;
}

template struct Conv2d<float>;
template struct Conv2d<double>;
template struct ConvTranspose2d<float>;
template struct ConvTranspose2d<double>;
template struct ResBlock<float>;
template struct ResBlock<double>;
template void init_gaussian(const ParamList<float>&, Engine&, double);
template void init_gaussian(const ParamList<double>&, Engine&, double);
template void zero_params(const ParamList<float>&);
template void zero_params(const ParamList<double>&);
template std::uint64_t param_checksum(const ParamList<float>&);
template std::uint64_t param_checksum(const ParamList<double>&);

}  // namespace mcgan::nn
