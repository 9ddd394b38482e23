#include "mcgan/cli/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mcgan/core/error.hpp"
#include "mcgan/core/rng.hpp"

namespace mcgan::cli {

namespace {

enum class Kind { integer, unsigned_integer, real, boolean, text, seed };

struct KeySpec {
  const char* key;
  Kind kind;
  const char* fallback;
};

// Defaults mirror the module-level config structs.
const std::vector<KeySpec>& registry() {
  static const std::vector<KeySpec> keys = {
      {"data.manifest", Kind::text, ""},
      {"data.split", Kind::text, "train"},
      {"gen.width", Kind::integer, "256"},
      {"gen.height", Kind::integer, "128"},
      {"gen.fusion_channels", Kind::integer, "32"},
      {"gen.local_channels", Kind::integer, "16"},
      {"gen.global_blocks", Kind::integer, "4"},
      {"gen.local_blocks", Kind::integer, "2"},
      {"gen.pretrain_global", Kind::boolean, "false"},
      {"disc.stem_channels", Kind::integer, "16"},
      {"disc.stem_depth", Kind::integer, "2"},
      {"disc.channels", Kind::integer, "16"},
      {"disc.layers", Kind::integer, "3"},
      {"disc.norm", Kind::boolean, "false"},
      {"mc.enabled", Kind::boolean, "true"},
      {"mc.n", Kind::integer, "5"},
      {"mc.dropout", Kind::real, "0.2"},
      {"train.preset", Kind::text, "paper"},
      {"train.lr", Kind::real, "0.05"},
      {"train.epochs_constant", Kind::integer, "100"},
      {"train.epochs_decay", Kind::integer, "100"},
      {"train.beta1", Kind::real, "0.5"},
      {"train.beta2", Kind::real, "0.999"},
      {"train.batch_size", Kind::integer, "4"},
      {"train.lambda", Kind::real, "10"},
      {"train.seed", Kind::seed, ""},
      {"train.max_steps", Kind::integer, "0"},
      {"train.checkpoint_every", Kind::integer, "0"},
      {"train.pretrain_epochs", Kind::integer, "0"},
      {"eval.threshold", Kind::real, "3"},
      {"eval.match_fraction", Kind::real, "0.75"},
      {"eval.row_stride", Kind::integer, "1"},
  };
  return keys;
}

const KeySpec& spec_of(std::string_view key) {
  for (const auto& s : registry())
    if (key == s.key) return s;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_bool(std::string_view v, bool& out) {
  if (v == "true" || v == "1") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0") {
    out = false;
    return true;
  }
  return false;
}

template <typename T>
bool parse_int(std::string_view v, T& out) {
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  return ec == std::errc{} && ptr == end && !v.empty();
}

bool parse_real(std::string_view v, double& out) {
  if (v.empty()) return false;
  std::string s(v);
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::logic_error&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

// Canonical text for a checked value.
std::string check(const KeySpec& spec, std::string_view raw) {
  const std::string v = trim(raw);
  auto bad = [&](const char* expected) {
    return ConfigError("config key " + std::string(spec.key) + ": expected " + expected + ", got '" + v + "'");
  };
  switch (spec.kind) {
    case Kind::integer: {
      long long x = 0;
      if (!parse_int(v, x)) throw bad("an integer");
      return std::to_string(x);
    }
    case Kind::unsigned_integer: {
      unsigned long long x = 0;
      if (!parse_int(v, x)) throw bad("a non-negative integer");
      return std::to_string(x);
    }
    case Kind::seed: {
      if (v.empty()) return v;
      unsigned long long x = 0;
      if (!parse_int(v, x)) throw bad("a non-negative integer");
      return std::to_string(x);
    }
    case Kind::real: {
      double x = 0;
      if (!parse_real(v, x)) throw bad("a finite number");
      return v;
    }
    case Kind::boolean: {
      bool b = false;
      if (!parse_bool(v, b)) throw bad("true or false");
      return b ? "true" : "false";
    }
    case Kind::text:
      return v;
  }
  return v;
}

bool valid_key_syntax(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  bool dot = false;
  for (std::size_t i = 0; i < key.size(); ++i) {
    const char c = key[i];
    if (c == '.') {
      if (key[i - 1] == '.') return false;
      dot = true;
    } else if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_')) {
      return false;
    }
  }
  return dot;
}

void flatten(const nlohmann::json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out);
    } else if (v.is_string()) {
      out.emplace_back(key, v.get<std::string>());
    } else if (v.is_boolean()) {
      out.emplace_back(key, v.get<bool>() ? "true" : "false");
    } else if (v.is_number()) {
      out.emplace_back(key, v.dump());
    } else {
      throw ConfigError("config key " + key + ": unsupported JSON value " + v.dump());
    }
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& s : registry()) values_.emplace(s.key, s.fallback);
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto& spec = spec_of(key);
  values_[spec.key] = check(spec, value);
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::merge_text(std::string_view content, std::string_view origin) {
  const std::string body = trim(content);
  std::vector<std::pair<std::string, std::string>> entries;
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(origin) + ": malformed JSON: " + e.what());
    }
    flatten(j, "", entries);
  } else {
    std::istringstream in{std::string(content)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(std::string_view(t).substr(0, eq));
      std::string value = t.substr(eq + 1);
      for (std::size_t i = 1; i < value.size(); ++i) {
        if (value[i] == '#' && std::isspace(static_cast<unsigned char>(value[i - 1]))) {
          value.resize(i);
          break;
        }
      }
      if (!valid_key_syntax(key))
        throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": malformed key '" + key + "'");
      entries.emplace_back(std::move(key), trim(value));
    }
  }
  std::set<std::string> seen;
  for (const auto& [k, v] : entries) {
    if (!seen.insert(k).second) throw ConfigError(std::string(origin) + ": duplicate key '" + k + "'");
    set(k, v);
  }
}

void RunConfig::merge_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), file.string());
}

void RunConfig::apply_preset(std::string_view name) {
  const auto preset = train::TrainConfig::preset(name);
  set("train.preset", name);
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, preset.lr0);
  set("train.lr", std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
}

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

bool RunConfig::is_default(std::string_view key) const { return get(key) == spec_of(key).fallback; }

int RunConfig::get_int(std::string_view key) const {
  int x = 0;
  if (!parse_int(std::string_view(get(key)), x)) throw ConfigError("config key " + std::string(key) + " is not an int");
  return x;
}

double RunConfig::get_double(std::string_view key) const {
  double x = 0;
  if (!parse_real(get(key), x)) throw ConfigError("config key " + std::string(key) + " is not a number");
  return x;
}

bool RunConfig::get_bool(std::string_view key) const {
  bool b = false;
  if (!parse_bool(get(key), b)) throw ConfigError("config key " + std::string(key) + " is not a bool");
  return b;
}

std::uint64_t RunConfig::get_u64(std::string_view key) const {
  std::uint64_t x = 0;
  if (!parse_int(std::string_view(get(key)), x))
    throw ConfigError("config key " + std::string(key) + " is not an unsigned integer");
  return x;
}

void RunConfig::resolve_seed() { values_["train.seed"] = std::to_string(resolve_root_seed(get("train.seed"), 0)); }

model::GeneratorConfig RunConfig::generator() const {
  model::GeneratorConfig c;
  c.width = get_int("gen.width");
  c.height = get_int("gen.height");
  c.fusion_channels = get_int("gen.fusion_channels");
  c.local_channels = get_int("gen.local_channels");
  c.global_blocks = get_int("gen.global_blocks");
  c.local_blocks = get_int("gen.local_blocks");
  c.pretrain_global = get_bool("gen.pretrain_global");
  c.validate();
  return c;
}

model::DiscriminatorConfig RunConfig::discriminator() const {
  model::DiscriminatorConfig c;
  c.stem_channels = get_int("disc.stem_channels");
  c.stem_depth = get_int("disc.stem_depth");
  c.channels = get_int("disc.channels");
  c.layers = get_int("disc.layers");
  c.norm = get_bool("disc.norm");
  c.validate();
  return c;
}

train::TrainConfig RunConfig::training() const {
  train::TrainConfig c;
  c.lr0 = get_double("train.lr");
  c.epochs_constant = get_int("train.epochs_constant");
  c.epochs_decay = get_int("train.epochs_decay");
  c.beta1 = get_double("train.beta1");
  c.beta2 = get_double("train.beta2");
  c.batch_size = get_int("train.batch_size");
  c.lambda = get_double("train.lambda");
  c.seed = resolve_root_seed(get("train.seed"), 0);
  c.checkpoint_every = get_int("train.checkpoint_every");
  c.pretrain_epochs = get_int("train.pretrain_epochs");
  c.mc.enabled = get_bool("mc.enabled");
  c.mc.n = get_int("mc.n");
  c.mc.dropout = get_double("mc.dropout");
  c.validate();
  return c;
}

metrics::EvalConfig RunConfig::evaluation() const {
  metrics::EvalConfig c;
  c.threshold = get_double("eval.threshold");
  c.match_fraction = get_double("eval.match_fraction");
  c.row_stride = get_int("eval.row_stride");
  if (!(c.threshold > 0)) throw ConfigError("eval.threshold must be positive");
  if (!(c.match_fraction > 0 && c.match_fraction <= 1)) throw ConfigError("eval.match_fraction must be in (0, 1]");
  if (c.row_stride < 1) throw ConfigError("eval.row_stride must be >= 1");
  return c;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

std::vector<std::string> RunConfig::known_keys() {
  std::vector<std::string> out;
  for (const auto& s : registry()) out.emplace_back(s.key);
  std::sort(out.begin(), out.end());
  return out;
}

RunConfig layered_config(const std::filesystem::path& file, std::string_view preset,
                         const std::vector<std::string>& overrides) {
  RunConfig c;
  if (!file.empty()) c.merge_file(file);
  if (!preset.empty()) c.apply_preset(preset);
  for (const auto& o : overrides) c.set_assignment(o);
  c.resolve_seed();
  return c;
}

}  // namespace mcgan::cli
