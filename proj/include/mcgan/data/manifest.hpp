#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mcgan/data/scene.hpp"

namespace mcgan::data {

inline constexpr int kManifestSchemaVersion = 1;

struct ManifestEntry {
  std::string label;  // relative to the manifest directory
  std::string image;
  std::string split;  // "train" or "val"
  std::uint64_t seed = 0;
  std::vector<std::string> augmentations;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  double split_ratio = 0.8;
  std::uint64_t split_seed = 0;
  std::vector<ManifestEntry> entries;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Deterministic shuffle by `seed`; the first round(ratio * n) entries train.
std::pair<std::vector<ManifestEntry>, std::vector<ManifestEntry>> split_dataset(const DatasetManifest& manifest,
                                                                                double ratio, std::uint64_t seed);

/// Applies split_dataset and writes the tags back into the entries.
void assign_splits(DatasetManifest& manifest, double ratio, std::uint64_t seed);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& file);

/// Reads and validates: schema version, every referenced file exists, split
/// tags are "train"/"val".
DatasetManifest read_manifest(const std::filesystem::path& file);

struct SynthOptions {
  int count = 16;
  int height = 128;
  int width = 256;
  std::uint64_t seed = 0;
  int augment_copies = 0;  // augmented variants per base scene
  double split_ratio = 0.8;
};

/// Writes images/, labels/ and manifest.json under `out_dir`.
DatasetManifest synthesize_dataset(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace mcgan::data
