#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcgan/data/label_map.hpp"

namespace mcgan::data {

/// Scene description. Ranges are checked by validate().
struct SceneSpec {
  int num_tracks = 2;          // 1..4
  double occlusion = 0.0;      // 0..1, fraction of the maximum cable count
  double light_gradient = 0.0; // 0..1, strength of the lamp falloff
  double noise = 0.0;          // 0..0.25, per-channel Gaussian sigma
  int width = 256;             // must equal 2 * height
  int height = 128;            // 16..2048

  void validate() const;
};

struct SceneMeta {
  std::uint64_t seed = 0;
  SceneSpec spec;
  std::vector<std::string> augmentations;
};

struct ScenePair {
  LabelMap label;
  RgbImage image;
  SceneMeta meta;
};

/// One rail as a column position per row; rows are [top_row, height).
struct RailPolyline {
  int top_row = 0;
  std::vector<double> cols;  // cols[r - top_row]
  int thickness = 1;
  int track = 0;
};

struct Cable {
  double base_row = 0;
  double amplitude = 0;
  double period = 1;
  double phase = 0;
  int thickness = 1;
};

/// Deterministic geometry derived from (seed, spec) before rasterization.
struct SceneLayout {
  std::vector<RailPolyline> rails;  // 2 per track, left rail first
  std::vector<Cable> cables;
  double lamp_x = 0;
};

SceneLayout scene_layout(std::uint64_t seed, const SceneSpec& spec);

/// Pixels covered by one rail, as a row-major mask of the given size.
std::vector<std::uint8_t> rasterize_rail(const RailPolyline& rail, int width, int height);

/// Union of all rails of a layout as a class-1 mask (1 = rail).
std::vector<std::uint8_t> rasterize_rails(const SceneLayout& layout, int width, int height);

/// Renders a labeled scene. Rails are drawn last, so the class-1 pixels of the
/// label are exactly the rasterized rails. Throws ConfigError on bad specs.
ScenePair synth_scene(std::uint64_t seed, const SceneSpec& spec);

/// Random but valid spec for dataset synthesis.
SceneSpec random_scene_spec(std::uint64_t seed, int width, int height);

}  // namespace mcgan::data
