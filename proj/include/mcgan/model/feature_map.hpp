#pragma once

#include "mcgan/nn/autograd.hpp"

namespace mcgan::model {

/// Activation grid (C, H, W) tagged with its scale: 1 = full resolution of the
/// tensor it was derived from, 2 = half, 4 = quarter.
template <typename T>
struct FeatureMap {
  nn::Var<T> data;
  int scale = 1;

  int channels() const { return data.value().channels(); }
  int height() const { return data.value().height(); }
  int width() const { return data.value().width(); }
};

}  // namespace mcgan::model
