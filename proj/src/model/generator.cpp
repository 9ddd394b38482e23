#include "mcgan/model/generator.hpp"

#include <string>

namespace mcgan::model {

using nn::Var;

void GeneratorConfig::validate() const {
  if (width <= 0 || height <= 0 || width % 4 != 0 || height % 4 != 0)
    throw ConfigError("generator base size " + std::to_string(width) + "x" + std::to_string(height) +
                      " must be positive and divisible by 4");
  if (height < 8 || width < 8) throw ConfigError("generator base size must be at least 8x8");
  if (label_channels < 1 || fusion_channels < 1 || local_channels < 1) throw ConfigError("generator channel counts must be >= 1");
  if (global_blocks < 1 || local_blocks < 1) throw ConfigError("generator residual block counts must be >= 1");
}

template <typename T>
Var<T> LocalTail<T>::forward(const Var<T>& state, const std::vector<nn::Tensor<T>>& masks) const {
  if (!masks.empty() && masks.size() != blocks.size()) throw ConfigError("dropout mask count must match residual blocks");
  Var<T> h = state;
  for (std::size_t i = 0; i < blocks.size(); ++i) h = blocks[i](h, masks.empty() ? nullptr : &masks[i]);
  h = nn::relu(nn::instance_norm(up(h)));
  return nn::tanh(out(h));
}

template <typename T>
void LocalTail<T>::collect(nn::ParamList<T>& list) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect("gen/g2/res/" + std::to_string(i), list);
  up.collect("gen/g2/back/up", list);
  out.collect("gen/g2/back/out", list);
}

template <typename T>
GeneratorParams<T>::GeneratorParams(const GeneratorConfig& cfg) : config(cfg) {
  cfg.validate();
  const int c_in = cfg.label_channels, f = cfg.fusion_channels, l = cfg.local_channels;
  g1_front_in = nn::Conv2d<T>(c_in, f, 7, 1, 3);
  g1_front_down = nn::Conv2d<T>(f, 2 * f, 3, 2, 1);
  for (int i = 0; i < cfg.global_blocks; ++i) g1_blocks.emplace_back(2 * f);
  g1_up = nn::ConvTranspose2d<T>(2 * f, f, 3, 2, 1, 1);
  g1_out = nn::Conv2d<T>(f, 3, 7, 1, 3);
  g2_front_in = nn::Conv2d<T>(c_in, l, 7, 1, 3);
  g2_front_down = nn::Conv2d<T>(l, f, 3, 2, 1);
  for (int i = 0; i < cfg.local_blocks; ++i) tail.blocks.emplace_back(f);
  tail.up = nn::ConvTranspose2d<T>(f, l, 3, 2, 1, 1);
  tail.out = nn::Conv2d<T>(l, 3, 7, 1, 3);
}

template <typename T>
GeneratorParams<T> GeneratorParams<T>::clone() const {
  GeneratorParams<T> copy(config);
  const auto src = parameters();
  const auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    Var<T> d = dst[i].var;
    d.mutable_value() = src[i].var.value();
  }
  return copy;
}

template <typename T>
nn::ParamList<T> GeneratorParams<T>::parameters() const {
  nn::ParamList<T> list;
  g1_front_in.collect("gen/g1/front/in", list);
  g1_front_down.collect("gen/g1/front/down", list);
  for (std::size_t i = 0; i < g1_blocks.size(); ++i) g1_blocks[i].collect("gen/g1/res/" + std::to_string(i), list);
  g1_up.collect("gen/g1/back/up", list);
  g1_out.collect("gen/g1/back/out", list);
  g2_front_in.collect("gen/g2/front/in", list);
  g2_front_down.collect("gen/g2/front/down", list);
  tail.collect(list);
  return list;
}

template <typename T>
GeneratorParams<T> init_generator(const GeneratorConfig& config, Engine& rng) {
  GeneratorParams<T> params(config);
  nn::init_gaussian(params.parameters(), rng, kInitStddev);
  return params;
}

namespace {

void require_label(const nn::Shape& s, int channels, int height, int width, const char* where) {
  if (s.size() != 3 || s[0] != channels || s[1] != height || s[2] != width)
    throw ShapeError(std::string(where) + ": expected label " + nn::shape_string({channels, height, width}) + ", got " +
                     nn::shape_string(s));
}

}  // namespace

template <typename T>
GlobalOutput<T> g1_forward(const GeneratorParams<T>& p, const Var<T>& label_half) {
  const auto& cfg = p.config;
  require_label(label_half.shape(), cfg.label_channels, cfg.half_height(), cfg.half_width(), "g1_forward");
  Var<T> h = nn::relu(nn::instance_norm(p.g1_front_in(label_half)));
  h = nn::relu(nn::instance_norm(p.g1_front_down(h)));
  for (const auto& block : p.g1_blocks) h = block(h);
  Var<T> features = nn::relu(nn::instance_norm(p.g1_up(h)));
  return {nn::tanh(p.g1_out(features)), FeatureMap<T>{features, 2}};
}

template <typename T>
FeatureMap<T> g2_front(const GeneratorParams<T>& p, const Var<T>& label_full) {
  const auto& cfg = p.config;
  require_label(label_full.shape(), cfg.label_channels, cfg.height, cfg.width, "g2_forward");
  Var<T> h = nn::relu(nn::instance_norm(p.g2_front_in(label_full)));
  h = nn::relu(nn::instance_norm(p.g2_front_down(h)));
  return {h, 2};
}

template <typename T>
FeatureMap<T> fuse(const FeatureMap<T>& a, const FeatureMap<T>& b) {
  if (a.data.shape() != b.data.shape())
    throw ShapeError("fuse: feature maps differ: " + nn::shape_string(a.data.shape()) + " vs " + nn::shape_string(b.data.shape()));
  return {nn::add(a.data, b.data), a.scale};
}

template <typename T>
Var<T> g2_forward(const GeneratorParams<T>& p, const Var<T>& label_full, const FeatureMap<T>& g1_backend) {
  return p.tail.forward(fuse(g2_front(p, label_full), g1_backend).data);
}

template <typename T>
Var<T> half_resolution_label(const Var<T>& label_full) {
  return nn::avg_pool(label_full, 2);
}

template <typename T>
GeneratorOutput<T> generate(const GeneratorParams<T>& p, const Var<T>& label_full) {
  GeneratorOutput<T> out;
  out.global = g1_forward(p, half_resolution_label(label_full));
  out.fused = fuse(g2_front(p, label_full), out.global.backend);
  out.image = p.tail.forward(out.fused.data);
  return out;
}

#define MCGAN_INSTANTIATE_GENERATOR(T)                                                             \
  template struct LocalTail<T>;                                                                    \
  template struct GeneratorParams<T>;                                                              \
  template GeneratorParams<T> init_generator(const GeneratorConfig&, Engine&);                     \
  template GlobalOutput<T> g1_forward(const GeneratorParams<T>&, const Var<T>&);                   \
  template FeatureMap<T> g2_front(const GeneratorParams<T>&, const Var<T>&);                       \
  template FeatureMap<T> fuse(const FeatureMap<T>&, const FeatureMap<T>&);                         \
  template Var<T> g2_forward(const GeneratorParams<T>&, const Var<T>&, const FeatureMap<T>&);      \
  template Var<T> half_resolution_label(const Var<T>&);                                            \
  template GeneratorOutput<T> generate(const GeneratorParams<T>&, const Var<T>&);

MCGAN_INSTANTIATE_GENERATOR(float)
MCGAN_INSTANTIATE_GENERATOR(double)

}  // namespace mcgan::model
