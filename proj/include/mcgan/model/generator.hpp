#pragma once

#include <vector>

#include "mcgan/core/rng.hpp"
#include "mcgan/data/label_map.hpp"
#include "mcgan/model/feature_map.hpp"
#include "mcgan/nn/layers.hpp"

namespace mcgan::model {

/// Shape of the two-stage generator. G1 (global) runs at half the base
/// resolution; G2 (local enhancer) runs at the base resolution.
struct GeneratorConfig {
  int width = 256;           // base (full) resolution
  int height = 128;
  int label_channels = data::kNumClasses;
  int fusion_channels = 32;  // G1 backend output == G2 frontend output
  int local_channels = 16;   // G2 outer width
  int global_blocks = 4;     // residual blocks in G1
  int local_blocks = 2;      // residual blocks in G2
  bool pretrain_global = false;

  /// Throws ConfigError on invalid values.
  void validate() const;

  int half_width() const { return width / 2; }
  int half_height() const { return height / 2; }

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// The G2 completion path: residual blocks plus transposed-conv backend.
/// Split out so the virtual rollout generator can hold a frozen copy.
template <typename T>
struct LocalTail {
  std::vector<nn::ResBlock<T>> blocks;   // G2(R)
  nn::ConvTranspose2d<T> up;             // G2(B)
  nn::Conv2d<T> out;                     // G2(B) output head

  /// `masks`, when non-empty, holds one dropout mask per residual block.
  nn::Var<T> forward(const nn::Var<T>& state, const std::vector<nn::Tensor<T>>& masks = {}) const;
  void collect(nn::ParamList<T>& out) const;
};

template <typename T>
struct GeneratorParams {
  GeneratorConfig config;

  // G1(F)
  nn::Conv2d<T> g1_front_in, g1_front_down;
  // G1(R)
  std::vector<nn::ResBlock<T>> g1_blocks;
  // G1(B); `g1_out` maps the backend features to the half-resolution image.
  nn::ConvTranspose2d<T> g1_up;
  nn::Conv2d<T> g1_out;
  // G2(F)
  nn::Conv2d<T> g2_front_in, g2_front_down;
  // G2(R) + G2(B)
  LocalTail<T> tail;

  GeneratorParams() = default;
  /// Allocates zero-valued parameters. Throws ConfigError for invalid configs.
  explicit GeneratorParams(const GeneratorConfig& cfg);

  /// Deep copy with fresh parameter leaves.
  GeneratorParams clone() const;

  /// Ordered parameter list. Names are "gen/<group>/..." with groups
  /// g1/front, g1/res, g1/back, g2/front, g2/res, g2/back.
  nn::ParamList<T> parameters() const;
};

inline constexpr double kInitStddev = 0.02;

/// Allocates and draws weights from N(0, 0.02), biases zero.
template <typename T>
GeneratorParams<T> init_generator(const GeneratorConfig& config, Engine& rng);

template <typename T>
struct GlobalOutput {
  nn::Var<T> image_half;       // (3, H/2, W/2), tanh range
  FeatureMap<T> backend;       // last G1(B) feature map, (fusion, H/2, W/2)
};

/// G1 on a half-resolution one-hot label map.
template <typename T>
GlobalOutput<T> g1_forward(const GeneratorParams<T>& params, const nn::Var<T>& label_half);

/// G2(F) on the full-resolution label map; output is at half resolution.
template <typename T>
FeatureMap<T> g2_front(const GeneratorParams<T>& params, const nn::Var<T>& label_full);

/// Elementwise sum of the G2 frontend and G1 backend feature maps.
template <typename T>
FeatureMap<T> fuse(const FeatureMap<T>& g2_front, const FeatureMap<T>& g1_backend);

/// Full G2: frontend, fusion with `g1_backend`, tail. Output (3, H, W) in [-1, 1].
template <typename T>
nn::Var<T> g2_forward(const GeneratorParams<T>& params, const nn::Var<T>& label_full, const FeatureMap<T>& g1_backend);

/// Area-downsampled one-hot map fed to G1.
template <typename T>
nn::Var<T> half_resolution_label(const nn::Var<T>& label_full);

template <typename T>
struct GeneratorOutput {
  GlobalOutput<T> global;
  FeatureMap<T> fused;  // intermediate state entering G2(R)
  nn::Var<T> image;     // (3, H, W)
};

/// Whole pipeline on a (label_channels, H, W) one-hot tensor.
template <typename T>
GeneratorOutput<T> generate(const GeneratorParams<T>& params, const nn::Var<T>& label_full);

}  // namespace mcgan::model
