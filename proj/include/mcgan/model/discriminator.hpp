#pragma once

#include <array>
#include <vector>

#include "mcgan/core/rng.hpp"
#include "mcgan/data/label_map.hpp"
#include "mcgan/model/feature_map.hpp"
#include "mcgan/nn/layers.hpp"

namespace mcgan::model {

inline constexpr int kNumScales = 3;
/// Downsampling factor of the shared stem.
inline constexpr int kStemStride = 2;
inline constexpr double kLeakySlope = 0.2;

struct DiscriminatorConfig {
  int input_channels = data::kNumClasses + 3;  // label one-hot ++ RGB
  int stem_channels = 16;
  int stem_depth = 2;  // stride-1 convs followed by one stride-2 conv
  int channels = 16;   // first-layer width of each scale discriminator
  int layers = 3;      // stride-2 convs per scale discriminator
  bool norm = false;   // instance norm after every branch conv but the first

  void validate() const;
  /// Intermediate feature maps exposed per discriminator (stem level included).
  int feature_layers() const { return layers + 1; }
  /// Patch-score stride relative to the discriminator's own input.
  int receptive_stride() const { return 1 << layers; }

  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

/// One of D1/D2/D3. All three share a topology; only the input scale differs.
template <typename T>
struct ScaleDiscriminator {
  int scale = 1;  // 1, 2 or 4
  bool norm = false;
  std::vector<nn::Conv2d<T>> convs;
  nn::Conv2d<T> head;

  void collect(const std::string& prefix, nn::ParamList<T>& out) const;
};

template <typename T>
struct DiscriminatorParams {
  DiscriminatorConfig config;
  std::vector<nn::Conv2d<T>> stem;
  std::array<ScaleDiscriminator<T>, kNumScales> scales;

  DiscriminatorParams() = default;
  explicit DiscriminatorParams(const DiscriminatorConfig& cfg);

  DiscriminatorParams clone() const;

  /// "disc/stem/...", then "disc/d1/...", "disc/d2/...", "disc/d3/...".
  nn::ParamList<T> parameters() const;
  nn::ParamList<T> stem_parameters() const;
  nn::ParamList<T> scale_parameters(int k) const;  // k in 0..2
};

template <typename T>
DiscriminatorParams<T> init_discriminator(const DiscriminatorConfig& config, Engine& rng);

template <typename T>
struct ScalePyramid {
  std::array<FeatureMap<T>, kNumScales> levels;
};

template <typename T>
struct DiscriminatorOutput {
  nn::Var<T> logits;                 // (1, h, w)
  nn::Var<T> scores;                 // sigmoid(logits), patch grid
  std::vector<nn::Var<T>> features;  // shallow -> deep, size feature_layers()
};

/// Shared stem on channel-concatenated (label one-hot, image).
template <typename T>
FeatureMap<T> shared_stem(const DiscriminatorParams<T>& params, const nn::Var<T>& label, const nn::Var<T>& image);

/// Average-pooled copies of the stem output at factors 1, 2, 4.
template <typename T>
ScalePyramid<T> build_pyramid(const FeatureMap<T>& stem_features);

/// One scale discriminator on its pyramid level.
template <typename T>
DiscriminatorOutput<T> d_forward(const ScaleDiscriminator<T>& d, const FeatureMap<T>& level);

/// Stem, pyramid and all three discriminators.
template <typename T>
std::array<DiscriminatorOutput<T>, kNumScales> discriminate(const DiscriminatorParams<T>& params, const nn::Var<T>& label,
                                                            const nn::Var<T>& image);

}  // namespace mcgan::model
