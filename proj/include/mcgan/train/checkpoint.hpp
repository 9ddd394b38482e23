#pragma once

#include <filesystem>

#include "json.hpp"
#include "mcgan/train/trainer.hpp"

namespace mcgan::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (all integers little-endian):
///   "MCGANCKP" | u32 version | u64 header_len | header JSON
///   | u32 array_count | arrays... | u64 FNV-1a of everything before it
/// array: u32 name_len | name | u32 rank | u32 dims[rank] | f32 data[]
/// The header carries {config, epoch, step, rng state, Adam step counts}.
/// Written to a temporary file and renamed into place.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);

/// Throws LoadError for bad magic, version mismatch, truncation, checksum
/// failure or missing/mis-shaped arrays. Nothing is returned on failure.
TrainState load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const model::GeneratorConfig& c);
nlohmann::json to_json(const model::DiscriminatorConfig& c);
nlohmann::json to_json(const TrainConfig& c);
model::GeneratorConfig generator_config_from_json(const nlohmann::json& j);
model::DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace mcgan::train
