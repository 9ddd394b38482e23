#include "mcgan/data/augment.hpp"

#include <cmath>
#include <cstdio>

namespace mcgan::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Rotation {
  double cx, cy, c, s;
  int width, height;
  // Source coordinates of output pixel (x, y).
  void source(int x, int y, double& sx, double& sy) const {
    const double dx = x - cx, dy = y - cy;
    sx = c * dx + s * dy + cx;
    sy = -s * dx + c * dy + cy;
  }
  bool inside(double sx, double sy) const { return sx >= 0 && sy >= 0 && sx <= width - 1 && sy <= height - 1; }
};

Rotation make_rotation(int width, int height, double degrees) {
  const double rad = degrees * kPi / 180.0;
  return {(width - 1) / 2.0, (height - 1) / 2.0, std::cos(rad), std::sin(rad), width, height};
}

}  // namespace

std::string Transform::describe() const {
  switch (kind) {
    case TransformKind::mirror: return "mirror";
    case TransformKind::flip: return "flip";
    case TransformKind::rotate: {
      char buf[48];
      std::snprintf(buf, sizeof buf, "rotate(%.3f)", degrees);
      return buf;
    }
  }
  return "unknown";
}

double rotation_out_of_frame_fraction(int width, int height, double degrees) {
  const Rotation rot = make_rotation(width, height, degrees);
  std::size_t outside = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double sx, sy;
      rot.source(x, y, sx, sy);
      if (!rot.inside(sx, sy)) ++outside;
    }
  return static_cast<double>(outside) / (static_cast<double>(width) * height);
}

ScenePair augment(const ScenePair& pair, const Transform& transform) {
  const int w = pair.label.width(), h = pair.label.height();
  if (pair.image.width() != w || pair.image.height() != h) throw ShapeError("augment: label/image size mismatch");
  ScenePair out{LabelMap(w, h), RgbImage(w, h), pair.meta};
  out.meta.augmentations.push_back(transform.describe());

  switch (transform.kind) {
    case TransformKind::mirror:
    case TransformKind::flip: {
      const bool horizontal = transform.kind == TransformKind::mirror;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int sy = horizontal ? y : h - 1 - y;
          const int sx = horizontal ? w - 1 - x : x;
          out.label.at(y, x) = pair.label.at(sy, sx);
          for (int c = 0; c < 3; ++c) out.image.at(c, y, x) = pair.image.at(c, sy, sx);
        }
      return out;
    }
    case TransformKind::rotate: break;
  }

  if (!(std::abs(transform.degrees) <= kMaxRotationDegrees))
    throw ConfigError("rotation must be within ±15 degrees, got " + std::to_string(transform.degrees));
  const double outside = rotation_out_of_frame_fraction(w, h, transform.degrees);
  if (outside > kMaxOutOfFrameFraction)
    throw DegenerateAugmentationError("rotation exposes " + std::to_string(outside * 100) + "% out-of-frame area");

  const Rotation rot = make_rotation(w, h, transform.degrees);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sx, sy;
      rot.source(x, y, sx, sy);
      if (!rot.inside(sx, sy)) continue;  // background, black
      out.label.at(y, x) = pair.label.at(static_cast<int>(std::lround(sy)), static_cast<int>(std::lround(sx)));
      const int x0 = std::min(static_cast<int>(sx), w - 1), y0 = std::min(static_cast<int>(sy), h - 1);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const float fx = static_cast<float>(sx - x0), fy = static_cast<float>(sy - y0);
      for (int c = 0; c < 3; ++c) {
        const float top = pair.image.at(c, y0, x0) * (1 - fx) + pair.image.at(c, y0, x1) * fx;
        const float bot = pair.image.at(c, y1, x0) * (1 - fx) + pair.image.at(c, y1, x1) * fx;
        out.image.at(c, y, x) = top * (1 - fy) + bot * fy;
      }
    }
  }
  out.image.clamp01();
  return out;
}

}  // namespace mcgan::data
