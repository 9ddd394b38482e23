#pragma once

#include <string>

#include "mcgan/data/scene.hpp"

namespace mcgan::data {

enum class TransformKind { rotate, mirror, flip };

struct Transform {
  TransformKind kind = TransformKind::mirror;
  double degrees = 0.0;  // rotate only, within ±kMaxRotationDegrees

  static Transform rotate(double deg) { return {TransformKind::rotate, deg}; }
  static Transform mirror() { return {TransformKind::mirror, 0.0}; }
  static Transform flip() { return {TransformKind::flip, 0.0}; }

  std::string describe() const;
};

inline constexpr double kMaxRotationDegrees = 15.0;
inline constexpr double kMaxOutOfFrameFraction = 0.30;

/// Applies the same geometric transform to label (nearest neighbour) and
/// image (bilinear). mirror = left/right, flip = top/bottom. Rotation is about
/// the frame center; pixels whose source falls outside the frame become
/// background / black. Throws DegenerateAugmentationError when more than
/// kMaxOutOfFrameFraction of the output has no source.
ScenePair augment(const ScenePair& pair, const Transform& transform);

/// Fraction of output pixels with no source under a rotation of `degrees`.
double rotation_out_of_frame_fraction(int width, int height, double degrees);

}  // namespace mcgan::data
