#include "mcgan/data/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "mcgan/core/rng.hpp"
#include "mcgan/data/augment.hpp"
#include "mcgan/data/png_io.hpp"

namespace mcgan::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<std::vector<ManifestEntry>, std::vector<ManifestEntry>> split_dataset(const DatasetManifest& manifest,
                                                                                double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0,1), got " + std::to_string(ratio));
  if (manifest.entries.empty()) throw ConfigError("cannot split an empty manifest");
  std::vector<std::size_t> order(manifest.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng(split_seed(seed, "dataset-split"));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(order.size())));
  std::pair<std::vector<ManifestEntry>, std::vector<ManifestEntry>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    ManifestEntry e = manifest.entries[order[i]];
    e.split = i < n_train ? "train" : "val";
    (i < n_train ? out.first : out.second).push_back(std::move(e));
  }
  return out;
}

void assign_splits(DatasetManifest& manifest, double ratio, std::uint64_t seed) {
  auto [train, val] = split_dataset(manifest, ratio, seed);
  std::vector<std::string> tags(manifest.entries.size());
  auto tag = [&](const std::vector<ManifestEntry>& part) {
    for (const auto& e : part)
      for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        if (manifest.entries[i].image == e.image) tags[i] = e.split;
  };
  tag(train);
  tag(val);
  for (std::size_t i = 0; i < tags.size(); ++i) manifest.entries[i].split = tags[i];
  manifest.split_ratio = ratio;
  manifest.split_seed = seed;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& file) {
  json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["split_ratio"] = manifest.split_ratio;
  j["split_seed"] = manifest.split_seed;
  j["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    j["entries"].push_back(
        {{"label", e.label}, {"image", e.image}, {"split", e.split}, {"seed", e.seed}, {"augmentations", e.augmentations}});
  }
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot write manifest: " + file.string());
  os << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open manifest: " + file.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + file.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    if (j.at("schema_version").get<int>() != kManifestSchemaVersion)
      throw IoError("unsupported manifest schema version in " + file.string());
    m.split_ratio = j.at("split_ratio").get<double>();
    m.split_seed = j.value("split_seed", std::uint64_t{0});
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.label = je.at("label").get<std::string>();
      e.image = je.at("image").get<std::string>();
      e.split = je.at("split").get<std::string>();
      e.seed = je.value("seed", std::uint64_t{0});
      e.augmentations = je.value("augmentations", std::vector<std::string>{});
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + file.string() + ": " + e.what());
  }
  const fs::path base = file.parent_path();
  for (const auto& e : m.entries) {
    if (e.split != "train" && e.split != "val") throw IoError("invalid split tag '" + e.split + "' in " + file.string());
    for (const auto& rel : {e.label, e.image})
      if (!fs::exists(base / rel)) throw IoError("manifest references missing file: " + (base / rel).string());
  }
  return m;
}

DatasetManifest synthesize_dataset(const SynthOptions& options, const fs::path& out_dir) {
  if (options.count < 1) throw ConfigError("count must be >= 1");
  if (options.augment_copies < 0) throw ConfigError("augment copies must be >= 0");
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "labels");

  DatasetManifest manifest;
  auto emit = [&](const ScenePair& pair, const std::string& stem) {
    const std::string label_rel = "labels/" + stem + ".png";
    const std::string image_rel = "images/" + stem + ".png";
    write_label_png(pair.label, out_dir / label_rel);
    write_image_png(pair.image, out_dir / image_rel);
    manifest.entries.push_back({label_rel, image_rel, "train", pair.meta.seed, pair.meta.augmentations});
  };

  for (int i = 0; i < options.count; ++i) {
    const std::uint64_t scene_seed = split_seed(options.seed, "scene", static_cast<std::uint64_t>(i));
    SceneSpec spec = random_scene_spec(scene_seed, options.width, options.height);
    // Small frames cannot always separate four tracks; fall back to fewer.
    ScenePair pair;
    for (;;) {
      try {
        pair = synth_scene(scene_seed, spec);
        break;
      } catch (const ConfigError&) {
        if (spec.num_tracks == 1) throw;
        --spec.num_tracks;
      }
    }
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%06d", i);
    emit(pair, stem);

    Engine aug_rng(split_seed(scene_seed, "augment"));
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_real_distribution<double> angle(-10.0, 10.0);
    for (int a = 0; a < options.augment_copies; ++a) {
      const int k = kind(aug_rng);
      const double deg = angle(aug_rng);
      const Transform t = k == 0 ? Transform::rotate(deg) : (k == 1 ? Transform::mirror() : Transform::flip());
      char aug_stem[48];
      std::snprintf(aug_stem, sizeof aug_stem, "%s_aug%d", stem, a + 1);
      emit(augment(pair, t), aug_stem);
    }
  }
  assign_splits(manifest, options.split_ratio, options.seed);
  write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace mcgan::data
