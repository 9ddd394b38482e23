#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace mcgan {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent child seed from a root seed and a named stream.
///
/// child = mix64(root ^ mix64(fnv1a64(stream))). Every consumer of randomness
/// (scene synthesis, weight init, epoch shuffles, rollout masks) takes its seed
/// from a distinct stream name, so adding a consumer never perturbs the others.
std::uint64_t split_seed(std::uint64_t root, std::string_view stream) noexcept;

/// Child seed for the index-th element of a stream (e.g. scene #i).
std::uint64_t split_seed(std::uint64_t root, std::string_view stream, std::uint64_t index) noexcept;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

/// Textual engine state (the standard stream representation).
std::string engine_state(const Engine& engine);
Engine engine_from_state(const std::string& state);

/// Root seed: explicit value if given, else MCGAN_SEED, else `fallback`.
std::uint64_t resolve_root_seed(const std::string& explicit_value, std::uint64_t fallback);

}  // namespace mcgan
