#include <cstdlib>

#include "doctest.h"
#include "mcgan/core/error.hpp"
#include "mcgan/core/rng.hpp"

using namespace mcgan;

TEST_CASE("split seeds are deterministic and stream-separated") {
  CHECK(split_seed(1, "a") == split_seed(1, "a"));
  CHECK(split_seed(1, "a") != split_seed(1, "b"));
  CHECK(split_seed(1, "a") != split_seed(2, "a"));
  CHECK(split_seed(1, "scene", 0) != split_seed(1, "scene", 1));
}

TEST_CASE("engine state round-trips") {
  Engine e(42);
  e.discard(17);
  Engine copy = engine_from_state(engine_state(e));
  CHECK(copy == e);
  CHECK(copy() == e());
  CHECK_THROWS_AS(engine_from_state("not a state"), LoadError);
}

TEST_CASE("root seed falls back to MCGAN_SEED") {
  ::setenv("MCGAN_SEED", "77", 1);
  CHECK(resolve_root_seed("", 5) == 77);
  CHECK(resolve_root_seed("9", 5) == 9);
  ::unsetenv("MCGAN_SEED");
  CHECK(resolve_root_seed("", 5) == 5);
  CHECK_THROWS_AS(resolve_root_seed("12x", 0), ConfigError);
}
