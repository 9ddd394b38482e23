#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mcgan/nn/tensor.hpp"

namespace mcgan::data {

inline constexpr int kNumClasses = 4;

enum class LabelClass : std::uint8_t {
  background = 0,
  track_line = 1,
  rail_bed = 2,
  occluder = 3,
};

/// Per-pixel class ids. Values are in [0, kNumClasses).
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, std::uint8_t fill = 0);
  LabelMap(int width, int height, std::vector<std::uint8_t> ids);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return ids_.size(); }

  std::uint8_t& at(int y, int x) noexcept { return ids_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int y, int x) const noexcept { return ids_[static_cast<std::size_t>(y) * width_ + x]; }
  const std::vector<std::uint8_t>& ids() const noexcept { return ids_; }
  std::vector<std::uint8_t>& ids() noexcept { return ids_; }

  std::size_t count(std::uint8_t cls) const;

  /// Throws ShapeError unless every id is a valid class.
  void validate() const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> ids_;
};

/// Planar RGB, values in [0, 1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, float fill = 0.0F);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  float& at(int c, int y, int x) noexcept { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
  float at(int c, int y, int x) const noexcept { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  void clamp01();

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

using Color = std::array<float, 3>;

/// Base render color for each class.
const std::array<Color, kNumClasses>& palette();

/// Darkest multiplicative illumination the renderer applies.
inline constexpr float kMinIllumination = 0.4F;

/// Per-pixel class by nearest palette color under an unknown brightness
/// factor in [kMinIllumination, 1].
LabelMap classify_pixels(const RgbImage& image);

/// (kNumClasses, H, W) one-hot encoding.
template <typename T>
nn::Tensor<T> one_hot(const LabelMap& label);

/// (3, H, W) tensor in [-1, 1] from an image in [0, 1], and back (clamped).
template <typename T>
nn::Tensor<T> image_to_tensor(const RgbImage& image);
template <typename T>
RgbImage tensor_to_image(const nn::Tensor<T>& tensor);

}  // namespace mcgan::data
