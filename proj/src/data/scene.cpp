#include "mcgan/data/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mcgan/core/rng.hpp"

namespace mcgan::data {

namespace {

constexpr int kMaxCables = 3;
constexpr double kPi = 3.14159265358979323846;

bool rails_separated(const std::vector<std::vector<std::uint8_t>>& masks, int width, int height) {
  // owner id per pixel, 0 = free
  std::vector<int> owner(static_cast<std::size_t>(width) * height, 0);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    for (std::size_t i = 0; i < owner.size(); ++i) {
      if (!masks[r][i]) continue;
      if (owner[i]) return false;
      owner[i] = static_cast<int>(r) + 1;
    }
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int a = owner[static_cast<std::size_t>(y) * width + x];
      if (!a) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
          const int b = owner[static_cast<std::size_t>(yy) * width + xx];
          if (b && b != a) return false;
        }
    }
  return true;
}

}  // namespace

void SceneSpec::validate() const {
  if (num_tracks < 1 || num_tracks > 4) throw ConfigError("num_tracks must be in 1..4, got " + std::to_string(num_tracks));
  if (!(occlusion >= 0.0 && occlusion <= 1.0)) throw ConfigError("occlusion must be in [0,1]");
  if (!(light_gradient >= 0.0 && light_gradient <= 1.0)) throw ConfigError("light_gradient must be in [0,1]");
  if (!(noise >= 0.0 && noise <= 0.25)) throw ConfigError("noise must be in [0,0.25]");
  if (height < 16 || height > 2048) throw ConfigError("height must be in 16..2048, got " + std::to_string(height));
  if (width != 2 * height) throw ConfigError("width must equal 2 * height");
}

std::vector<std::uint8_t> rasterize_rail(const RailPolyline& rail, int width, int height) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 0);
  const int rows = static_cast<int>(rail.cols.size());
  for (int i = 0; i < rows; ++i) {
    const int y = rail.top_row + i;
    if (y < 0 || y >= height) continue;
    const long a = std::lround(rail.cols[static_cast<std::size_t>(i)]);
    const long b = i + 1 < rows ? std::lround(rail.cols[static_cast<std::size_t>(i + 1)]) : a;
    const long lo = std::min(a, b);
    const long hi = std::max(a, b) + rail.thickness - 1;
    for (long x = std::max(0L, lo); x <= std::min<long>(width - 1, hi); ++x) mask[static_cast<std::size_t>(y) * width + x] = 1;
  }
  return mask;
}

std::vector<std::uint8_t> rasterize_rails(const SceneLayout& layout, int width, int height) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 0);
  for (const auto& rail : layout.rails) {
    const auto m = rasterize_rail(rail, width, height);
    for (std::size_t i = 0; i < m.size(); ++i) mask[i] |= m[i];
  }
  return mask;
}

SceneLayout scene_layout(std::uint64_t seed, const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width, h = spec.height;
  Engine rng(split_seed(seed, "scene-layout"));
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const double vp_x = w * (0.5 + 0.1 * (u(rng) - 0.5));
  const double vp_row = h * 0.1;
  const double curve = w * 0.2 * (u(rng) - 0.5);
  const int thickness = std::max(1, h / 64);

  // Track centers along the bottom row, evenly spread over [0.1w, 0.9w].
  const int n = spec.num_tracks;
  const double slot = 0.8 * w / n;
  const double gauge = slot * (0.40 + 0.1 * u(rng));
  std::vector<double> bottoms;
  for (int t = 0; t < n; ++t) {
    const double center = 0.1 * w + (t + 0.5) * slot + slot * 0.06 * (u(rng) - 0.5);
    bottoms.push_back(center - gauge / 2);
    bottoms.push_back(center + gauge / 2);
  }

  SceneLayout layout;
  layout.lamp_x = w * (0.4 + 0.2 * u(rng));
  for (int top = static_cast<int>(h * 0.45); top < h - 4; ++top) {
    layout.rails.clear();
    for (std::size_t j = 0; j < bottoms.size(); ++j) {
      RailPolyline rail;
      rail.top_row = top;
      rail.thickness = thickness;
      rail.track = static_cast<int>(j / 2);
      for (int y = top; y < h; ++y) {
        const double t = (y - vp_row) / (h - 1 - vp_row);
        rail.cols.push_back(vp_x + (bottoms[j] - vp_x) * t + curve * (1 - t) * (1 - t));
      }
      layout.rails.push_back(std::move(rail));
    }
    std::vector<std::vector<std::uint8_t>> masks;
    for (const auto& rail : layout.rails) masks.push_back(rasterize_rail(rail, w, h));
    if (rails_separated(masks, w, h)) break;
    if (top + 1 >= h - 4) throw ConfigError("image too small to separate " + std::to_string(n) + " tracks");
  }

  const int cables = static_cast<int>(std::lround(spec.occlusion * kMaxCables));
  for (int c = 0; c < cables; ++c) {
    Cable cable;
    cable.base_row = h * (0.3 + 0.65 * u(rng));
    cable.amplitude = h * 0.08 * u(rng);
    cable.period = w * (0.4 + u(rng));
    cable.phase = 2 * kPi * u(rng);
    cable.thickness = std::max(1, h / 48);
    layout.cables.push_back(cable);
  }
  return layout;
}

ScenePair synth_scene(std::uint64_t seed, const SceneSpec& spec) {
  const SceneLayout layout = scene_layout(seed, spec);
  const int w = spec.width, h = spec.height;
  LabelMap label(w, h, static_cast<std::uint8_t>(LabelClass::background));

  // Rail bed under each track, widened beyond the rails.
  for (std::size_t j = 0; j + 1 < layout.rails.size(); j += 2) {
    const auto& left = layout.rails[j];
    const auto& right = layout.rails[j + 1];
    for (std::size_t i = 0; i < left.cols.size(); ++i) {
      const int y = left.top_row + static_cast<int>(i);
      const double g = right.cols[i] - left.cols[i];
      const long lo = std::lround(left.cols[i] - 0.25 * g);
      const long hi = std::lround(right.cols[i] + 0.25 * g) + right.thickness - 1;
      for (long x = std::max(0L, lo); x <= std::min<long>(w - 1, hi); ++x) label.at(y, static_cast<int>(x)) = static_cast<std::uint8_t>(LabelClass::rail_bed);
    }
  }

  for (const auto& cable : layout.cables) {
    for (int x = 0; x < w; ++x) {
      const double yc = cable.base_row + cable.amplitude * std::sin(2 * kPi * x / cable.period + cable.phase);
      const long y0 = std::lround(yc);
      for (long y = y0; y < y0 + cable.thickness; ++y)
        if (y >= 0 && y < h) label.at(static_cast<int>(y), x) = static_cast<std::uint8_t>(LabelClass::occluder);
    }
  }

  const auto rails = rasterize_rails(layout, w, h);
  for (std::size_t i = 0; i < rails.size(); ++i)
    if (rails[i]) label.ids()[i] = static_cast<std::uint8_t>(LabelClass::track_line);

  // Photo: palette color, sleeper banding on the bed, lamp falloff, sensor noise.
  RgbImage image(w, h);
  Engine noise_rng(split_seed(seed, "scene-noise"));
  std::normal_distribution<float> noise(0.0F, static_cast<float>(spec.noise));
  const double sleeper_period = std::max(4.0, h / 16.0);
  const double max_dist = std::hypot(std::max(layout.lamp_x, w - layout.lamp_x), static_cast<double>(h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto cls = label.at(y, x);
      float shade = 1.0F;
      if (cls == static_cast<std::uint8_t>(LabelClass::rail_bed) && std::fmod(y, sleeper_period) < sleeper_period * 0.3) shade = 0.85F;
      const double d = std::hypot(x - layout.lamp_x, static_cast<double>(h - 1 - y)) / max_dist;
      const float light = static_cast<float>(1.0 - (1.0 - kMinIllumination) * spec.light_gradient * std::min(1.0, d));
      const auto& col = palette()[cls];
      for (int c = 0; c < 3; ++c) {
        float v = col[static_cast<std::size_t>(c)] * shade * light;
        if (spec.noise > 0) v += noise(noise_rng);
        image.at(c, y, x) = v;
      }
    }
  }
  image.clamp01();
  return ScenePair{std::move(label), std::move(image), SceneMeta{seed, spec, {}}};
}

SceneSpec random_scene_spec(std::uint64_t seed, int width, int height) {
  Engine rng(split_seed(seed, "scene-spec"));
  std::uniform_int_distribution<int> tracks(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.num_tracks = tracks(rng);
  spec.occlusion = u(rng);
  spec.light_gradient = 0.8 * u(rng);
  spec.noise = 0.04 * u(rng);
  return spec;
}

}  // namespace mcgan::data
