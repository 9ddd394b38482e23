#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mcgan/metrics/metrics.hpp"
#include "mcgan/model/discriminator.hpp"
#include "mcgan/model/generator.hpp"
#include "mcgan/train/trainer.hpp"

namespace mcgan::cli {

/// Resolved run configuration: every key namespaced (data., gen., disc.,
/// mc., train., eval.) and always present.
///
/// Text grammar, one entry per line:
///   line    := blank | comment | entry
///   comment := '#' anything
///   entry   := key '=' value [ws '#' anything]
///   key     := [a-z0-9_]+ ('.' [a-z0-9_]+)+
/// Surrounding whitespace is trimmed; a key may appear once per file.
/// A JSON object is accepted instead, either flat ({"train.lr": 0.01}) or
/// nested ({"train": {"lr": 0.01}}).
class RunConfig {
 public:
  /// All keys at their defaults.
  RunConfig();

  /// Sets a known key after type-checking. Throws ConfigError otherwise.
  void set(std::string_view key, std::string_view value);
  /// "key=value".
  void set_assignment(std::string_view assignment);
  /// Parses text or JSON content and applies every entry.
  void merge_text(std::string_view content, std::string_view origin = "<string>");
  void merge_file(const std::filesystem::path& file);
  /// Applies a named training preset (train.preset and train.lr).
  void apply_preset(std::string_view name);

  const std::string& get(std::string_view key) const;
  bool is_default(std::string_view key) const;
  int get_int(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;

  /// Replaces an empty train.seed by MCGAN_SEED or 0.
  void resolve_seed();

  model::GeneratorConfig generator() const;
  model::DiscriminatorConfig discriminator() const;
  train::TrainConfig training() const;
  metrics::EvalConfig evaluation() const;

  /// Sorted "key = value" lines; merge_text(to_text()) reproduces *this.
  std::string to_text() const;
  nlohmann::json to_json() const;

  const std::map<std::string, std::string, std::less<>>& entries() const { return values_; }
  static std::vector<std::string> known_keys();

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// Builds a config from defaults, an optional file, an optional preset and
/// "key=value" overrides, in that order, then resolves the seed.
RunConfig layered_config(const std::filesystem::path& file, std::string_view preset,
                         const std::vector<std::string>& overrides);

}  // namespace mcgan::cli
