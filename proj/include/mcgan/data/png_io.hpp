#pragma once

#include <filesystem>

#include "mcgan/data/label_map.hpp"

namespace mcgan::data {

/// Labels are 8-bit RGB PNGs with the class id in the red channel (G = B = 0).
void write_label_png(const LabelMap& label, const std::filesystem::path& path);
LabelMap read_label_png(const std::filesystem::path& path);

/// Images are 8-bit RGB PNGs; values are quantized with round(v * 255).
void write_image_png(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_image_png(const std::filesystem::path& path);

}  // namespace mcgan::data
