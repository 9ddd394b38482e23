#include "mcgan/core/rng.hpp"

#include <cstdlib>
#include <sstream>

#include "mcgan/core/error.hpp"

namespace mcgan {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t split_seed(std::uint64_t root, std::string_view stream) noexcept {
  return mix64(root ^ mix64(fnv1a64(stream)));
}

std::uint64_t split_seed(std::uint64_t root, std::string_view stream, std::uint64_t index) noexcept {
  return mix64(split_seed(root, stream) + mix64(index));
}

std::string engine_state(const Engine& engine) {
  std::ostringstream os;
  os << engine;
  return os.str();
}

Engine engine_from_state(const std::string& state) {
  Engine engine;
  std::istringstream is(state);
  is >> engine;
  if (!is) throw LoadError("malformed rng state");
  return engine;
}

std::uint64_t resolve_root_seed(const std::string& explicit_value, std::uint64_t fallback) {
  std::string text = explicit_value;
  if (text.empty()) {
    if (const char* env = std::getenv("MCGAN_SEED")) text = env;
  }
  if (text.empty()) return fallback;
  try {
    std::size_t used = 0;
    const auto value = std::stoull(text, &used);
    if (used != text.size()) throw ConfigError("seed is not an integer: " + text);
    return value;
  } catch (const std::logic_error&) {
    throw ConfigError("seed is not an integer: " + text);
  }
}

}  // namespace mcgan
