#include "mcgan/model/discriminator.hpp"

#include <algorithm>
#include <string>

#include "mcgan/model/generator.hpp"

namespace mcgan::model {

using nn::Var;

void DiscriminatorConfig::validate() const {
  if (input_channels < 1 || stem_channels < 1 || channels < 1) throw ConfigError("discriminator channel counts must be >= 1");
  if (stem_depth < 1) throw ConfigError("discriminator stem depth must be >= 1");
  if (layers < 1) throw ConfigError("discriminator layers must be >= 1");
}

template <typename T>
void ScaleDiscriminator<T>::collect(const std::string& prefix, nn::ParamList<T>& out) const {
  for (std::size_t i = 0; i < convs.size(); ++i) convs[i].collect(prefix + "/conv" + std::to_string(i), out);
  head.collect(prefix + "/head", out);
}

template <typename T>
DiscriminatorParams<T>::DiscriminatorParams(const DiscriminatorConfig& cfg) : config(cfg) {
  cfg.validate();
  for (int i = 0; i < cfg.stem_depth; ++i) {
    const int in = i == 0 ? cfg.input_channels : cfg.stem_channels;
    const int stride = i + 1 == cfg.stem_depth ? kStemStride : 1;
    stem.emplace_back(in, cfg.stem_channels, 3, stride, 1);
  }
  for (int k = 0; k < kNumScales; ++k) {
    auto& d = scales[static_cast<std::size_t>(k)];
    d.scale = 1 << k;
    d.norm = cfg.norm;
    int in = cfg.stem_channels;
    for (int i = 0; i < cfg.layers; ++i) {
      const int out = cfg.channels * std::min(1 << i, 4);
      d.convs.emplace_back(in, out, 3, 2, 1);
      in = out;
    }
    d.head = nn::Conv2d<T>(in, 1, 3, 1, 1);
  }
}

template <typename T>
DiscriminatorParams<T> DiscriminatorParams<T>::clone() const {
  DiscriminatorParams<T> copy(config);
  const auto src = parameters();
  const auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    Var<T> d = dst[i].var;
    d.mutable_value() = src[i].var.value();
  }
  return copy;
}

template <typename T>
nn::ParamList<T> DiscriminatorParams<T>::stem_parameters() const {
  nn::ParamList<T> list;
  for (std::size_t i = 0; i < stem.size(); ++i) stem[i].collect("disc/stem/conv" + std::to_string(i), list);
  return list;
}

template <typename T>
nn::ParamList<T> DiscriminatorParams<T>::scale_parameters(int k) const {
  nn::ParamList<T> list;
  scales.at(static_cast<std::size_t>(k)).collect("disc/d" + std::to_string(k + 1), list);
  return list;
}

template <typename T>
nn::ParamList<T> DiscriminatorParams<T>::parameters() const {
  nn::ParamList<T> list = stem_parameters();
  for (int k = 0; k < kNumScales; ++k) {
    auto part = scale_parameters(k);
    list.insert(list.end(), part.begin(), part.end());
  }
  return list;
}

template <typename T>
DiscriminatorParams<T> init_discriminator(const DiscriminatorConfig& config, Engine& rng) {
  DiscriminatorParams<T> params(config);
  nn::init_gaussian(params.parameters(), rng, kInitStddev);
  return params;
}

template <typename T>
FeatureMap<T> shared_stem(const DiscriminatorParams<T>& params, const Var<T>& label, const Var<T>& image) {
  const auto& ls = label.shape();
  const auto& is = image.shape();
  if (ls.size() != 3 || is.size() != 3 || ls[1] != is[1] || ls[2] != is[2])
    throw ShapeError("shared_stem: label " + nn::shape_string(ls) + " and image " + nn::shape_string(is) + " are not aligned");
  Var<T> h = nn::concat_channels(label, image);
  if (h.value().channels() != params.config.input_channels)
    throw ShapeError("shared_stem: expected " + std::to_string(params.config.input_channels) + " input channels");
  for (const auto& conv : params.stem) h = nn::leaky_relu(conv(h), T(kLeakySlope));
  return {h, 1};
}

template <typename T>
ScalePyramid<T> build_pyramid(const FeatureMap<T>& stem_features) {
  const int h = stem_features.height(), w = stem_features.width();
  if (h % 4 != 0 || w % 4 != 0)
    throw ShapeError("build_pyramid: stem features " + std::to_string(w) + "x" + std::to_string(h) + " not divisible by 4");
  ScalePyramid<T> p;
  p.levels[0] = {stem_features.data, 1};
  p.levels[1] = {nn::avg_pool(stem_features.data, 2), 2};
  p.levels[2] = {nn::avg_pool(stem_features.data, 4), 4};
  return p;
}

template <typename T>
DiscriminatorOutput<T> d_forward(const ScaleDiscriminator<T>& d, const FeatureMap<T>& level) {
  if (d.scale != level.scale)
    throw ConfigError("d_forward: discriminator for scale " + std::to_string(d.scale) + " given level at scale " +
                      std::to_string(level.scale));
  DiscriminatorOutput<T> out;
  out.features.push_back(level.data);
  Var<T> h = level.data;
  for (std::size_t i = 0; i < d.convs.size(); ++i) {
    h = d.convs[i](h);
    // A single-pixel map has no spatial statistics to normalize.
    if (d.norm && i > 0 && h.shape()[1] * h.shape()[2] > 1) h = nn::instance_norm(h);
    h = nn::leaky_relu(h, T(kLeakySlope));
    out.features.push_back(h);
  }
  out.logits = d.head(h);
  out.scores = nn::sigmoid(out.logits);
  return out;
}

template <typename T>
std::array<DiscriminatorOutput<T>, kNumScales> discriminate(const DiscriminatorParams<T>& params, const Var<T>& label,
                                                            const Var<T>& image) {
  const ScalePyramid<T> pyramid = build_pyramid(shared_stem(params, label, image));
  std::array<DiscriminatorOutput<T>, kNumScales> out;
  for (std::size_t k = 0; k < kNumScales; ++k) out[k] = d_forward(params.scales[k], pyramid.levels[k]);
  return out;
}

#define MCGAN_INSTANTIATE_DISC(T)                                                                          \
  template struct ScaleDiscriminator<T>;                                                                   \
  template struct DiscriminatorParams<T>;                                                                  \
  template DiscriminatorParams<T> init_discriminator(const DiscriminatorConfig&, Engine&);                 \
  template FeatureMap<T> shared_stem(const DiscriminatorParams<T>&, const Var<T>&, const Var<T>&);         \
  template ScalePyramid<T> build_pyramid(const FeatureMap<T>&);                                            \
  template DiscriminatorOutput<T> d_forward(const ScaleDiscriminator<T>&, const FeatureMap<T>&);           \
  template std::array<DiscriminatorOutput<T>, kNumScales> discriminate(const DiscriminatorParams<T>&, const Var<T>&, \
                                                                       const Var<T>&);

MCGAN_INSTANTIATE_DISC(float)
MCGAN_INSTANTIATE_DISC(double)

}  // namespace mcgan::model
