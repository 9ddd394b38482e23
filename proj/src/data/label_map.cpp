#include "mcgan/data/label_map.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace mcgan::data {

LabelMap::LabelMap(int width, int height, std::uint8_t fill)
    : width_(width), height_(height), ids_(static_cast<std::size_t>(width) * height, fill) {
  if (width <= 0 || height <= 0) throw ShapeError("label map dimensions must be positive");
}

LabelMap::LabelMap(int width, int height, std::vector<std::uint8_t> ids)
    : width_(width), height_(height), ids_(std::move(ids)) {
  if (width <= 0 || height <= 0) throw ShapeError("label map dimensions must be positive");
  if (ids_.size() != static_cast<std::size_t>(width) * height) throw ShapeError("label map data size mismatch");
}

std::size_t LabelMap::count(std::uint8_t cls) const {
  return static_cast<std::size_t>(std::count(ids_.begin(), ids_.end(), cls));
}

void LabelMap::validate() const {
  for (auto v : ids_)
    if (v >= kNumClasses) throw ShapeError("label map contains invalid class id " + std::to_string(v));
}

RgbImage::RgbImage(int width, int height, float fill)
    : width_(width), height_(height), data_(static_cast<std::size_t>(3) * width * height, fill) {
  if (width <= 0 || height <= 0) throw ShapeError("image dimensions must be positive");
}

void RgbImage::clamp01() {
  for (auto& v : data_) v = std::clamp(v, 0.0F, 1.0F);
}

const std::array<Color, kNumClasses>& palette() {
  static const std::array<Color, kNumClasses> colors{{
      {0.12F, 0.12F, 0.14F},  // background: dark roadway
      {0.92F, 0.92F, 0.88F},  // track line: polished rail
      {0.50F, 0.36F, 0.22F},  // rail bed: ballast
      {0.15F, 0.20F, 0.70F},  // occluder: cable
  }};
  return colors;
}

LabelMap classify_pixels(const RgbImage& image) {
  LabelMap out(image.width(), image.height());
  const auto& pal = palette();
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const float p[3] = {image.at(0, y, x), image.at(1, y, x), image.at(2, y, x)};
      float best = std::numeric_limits<float>::max();
      std::uint8_t best_cls = 0;
      for (int c = 0; c < kNumClasses; ++c) {
        const auto& col = pal[static_cast<std::size_t>(c)];
        const float cc = col[0] * col[0] + col[1] * col[1] + col[2] * col[2];
        const float pc = p[0] * col[0] + p[1] * col[1] + p[2] * col[2];
        const float s = std::clamp(pc / cc, kMinIllumination, 1.0F);
        float d = 0;
        for (int k = 0; k < 3; ++k) d += (p[k] - s * col[static_cast<std::size_t>(k)]) * (p[k] - s * col[static_cast<std::size_t>(k)]);
        if (d < best) {
          best = d;
          best_cls = static_cast<std::uint8_t>(c);
        }
      }
      out.at(y, x) = best_cls;
    }
  }
  return out;
}

template <typename T>
nn::Tensor<T> one_hot(const LabelMap& label) {
  label.validate();
  nn::Tensor<T> t(nn::Shape{kNumClasses, label.height(), label.width()});
  for (int y = 0; y < label.height(); ++y)
    for (int x = 0; x < label.width(); ++x) t.at(label.at(y, x), y, x) = T(1);
  return t;
}

template <typename T>
nn::Tensor<T> image_to_tensor(const RgbImage& image) {
  nn::Tensor<T> t(nn::Shape{3, image.height(), image.width()});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(image.data()[i] * 2.0F - 1.0F);
  return t;
}

template <typename T>
RgbImage tensor_to_image(const nn::Tensor<T>& tensor) {
  if (tensor.rank() != 3 || tensor.channels() != 3) throw ShapeError("expected a (3,H,W) tensor, got " + nn::shape_string(tensor.shape()));
  RgbImage img(tensor.width(), tensor.height());
  for (std::size_t i = 0; i < tensor.size(); ++i) img.data()[i] = static_cast<float>((tensor[i] + T(1)) / T(2));
  img.clamp01();
  return img;
}

template nn::Tensor<float> one_hot(const LabelMap&);
template nn::Tensor<double> one_hot(const LabelMap&);
template nn::Tensor<float> image_to_tensor(const RgbImage&);
template nn::Tensor<double> image_to_tensor(const RgbImage&);
template RgbImage tensor_to_image(const nn::Tensor<float>&);
template RgbImage tensor_to_image(const nn::Tensor<double>&);

}  // namespace mcgan::data
