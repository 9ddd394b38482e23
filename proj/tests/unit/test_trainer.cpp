#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mcgan/core/error.hpp"
#include "mcgan/data/scene.hpp"
#include "mcgan/train/checkpoint.hpp"
#include "mcgan/train/trainer.hpp"

using namespace mcgan;
using namespace mcgan::train;
namespace fs = std::filesystem;

namespace {

model::GeneratorConfig gen_cfg() {
  model::GeneratorConfig c;
  c.width = 32;
  c.height = 16;
  c.fusion_channels = 4;
  c.local_channels = 2;
  c.global_blocks = 1;
  c.local_blocks = 1;
  return c;
}

model::DiscriminatorConfig disc_cfg() {
  model::DiscriminatorConfig c;
  c.stem_channels = 4;
  c.channels = 4;
  return c;
}

TrainConfig train_cfg() {
  auto c = TrainConfig::preset("safe");
  c.batch_size = 2;
  c.mc.n = 2;
  c.seed = 5;
  return c;
}

std::vector<Sample> samples(int n) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    data::SceneSpec s;
    s.width = 32;
    s.height = 16;
    s.num_tracks = 1;
    auto p = data::synth_scene(100 + i, s);
    out.push_back(make_sample(p.label, p.image, "s" + std::to_string(i)));
  }
  return out;
}

bool same_params(const nn::ParamList<float>& a, const nn::ParamList<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].var.value() == b[i].var.value())) return false;
  return true;
}

}  // namespace

TEST_CASE("lr schedule") {
  auto c = TrainConfig::preset("paper");
  CHECK(lr_at(0, c) == 0.05);
  for (int e = 0; e < 100; ++e) CHECK(lr_at(e, c) == 0.05);
  CHECK(lr_at(150, c) == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(lr_at(200, c) == 0.0);
  for (int e = 1; e <= 200; ++e) CHECK(lr_at(e, c) <= lr_at(e - 1, c));
  CHECK_THROWS_AS(lr_at(-1, c), ConfigError);
  CHECK_THROWS_AS(lr_at(201, c), ConfigError);
  CHECK(TrainConfig::preset("safe").lr0 == 2e-4);
  CHECK_THROWS_AS(TrainConfig::preset("fast"), ConfigError);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  auto tc = train_cfg();
  tc.lr0 = 1e-3;
  tc.epochs_constant = 0;
  tc.epochs_decay = 1;
  auto state = init_train_state(gen_cfg(), disc_cfg(), tc);
  state.epoch = 1;  // lr_at(1) == 0
  auto before = state.clone();
  auto batch = samples(2);
  const auto r = train_step(state, batch);
  CHECK(r.lr == 0.0);
  CHECK(same_params(state.gen.parameters(), before.gen.parameters()));
  CHECK(same_params(state.disc.parameters(), before.disc.parameters()));
}

TEST_CASE("train_step is deterministic and updates both networks") {
  auto state = init_train_state(gen_cfg(), disc_cfg(), train_cfg());
  auto copy = state.clone();
  auto batch = samples(2);
  const auto ra = train_step(state, batch);
  const auto rb = train_step(copy, batch);
  CHECK(ra.losses.total_g == rb.losses.total_g);
  CHECK(same_params(state.gen.parameters(), copy.gen.parameters()));
  CHECK(same_params(state.disc.parameters(), copy.disc.parameters()));
  auto fresh = init_train_state(gen_cfg(), disc_cfg(), train_cfg());
  CHECK_FALSE(same_params(state.gen.parameters(), fresh.gen.parameters()));
  CHECK_FALSE(same_params(state.disc.parameters(), fresh.disc.parameters()));
  CHECK(ra.losses.finite());
  CHECK(ra.losses.total_g ==
        doctest::Approx(model::total_g_value(ra.losses.q, ra.losses.fm, ra.losses.lambda)).epsilon(1e-12));
}

TEST_CASE("MC off and MC with one dropout-free rollout agree") {
  auto tc = train_cfg();
  tc.mc.n = 1;
  tc.mc.dropout = 0.0;
  auto state = init_train_state(gen_cfg(), disc_cfg(), tc);
  auto s = samples(1);
  CHECK(rollout_adversarial_term(state, s[0], 99) == plain_adversarial_term(state, s[0]));

  auto off_cfg = tc;
  off_cfg.mc.enabled = false;
  auto on = init_train_state(gen_cfg(), disc_cfg(), tc);
  auto off = init_train_state(gen_cfg(), disc_cfg(), off_cfg);
  auto batch = samples(2);
  const auto r_on = train_step(on, batch);
  const auto r_off = train_step(off, batch);
  CHECK(r_on.losses.q == r_off.losses.q);
  CHECK(r_on.losses.total_g == r_off.losses.total_g);
}

TEST_CASE("batch order is a per-epoch permutation") {
  std::vector<int> seen(6, 0);
  for (int step = 0; step < 3; ++step)
    for (auto i : batch_indices(6, 2, 1, step)) ++seen[i];
  for (int v : seen) CHECK(v == 1);
  CHECK(steps_per_epoch(8, 4) == 2);
  CHECK(steps_per_epoch(7, 4) == 2);
}

TEST_CASE("non-finite losses abort before the update") {
  auto state = init_train_state(gen_cfg(), disc_cfg(), train_cfg());
  auto batch = samples(2);
  batch[1].image.fill(std::nanf(""));
  auto before = state.clone();
  try {
    train_step(state, batch);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("s1") != std::string::npos);
  }
  CHECK(same_params(state.disc.parameters(), before.disc.parameters()));
  CHECK(same_params(state.gen.parameters(), before.gen.parameters()));
}

TEST_CASE("checkpoint round-trip and corruption") {
  const fs::path dir = fs::temp_directory_path() / "mcgan_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto state = init_train_state(gen_cfg(), disc_cfg(), train_cfg());
  auto batch = samples(2);
  train_step(state, batch);
  save_checkpoint(state, dir / "a.ckpt");
  auto back = load_checkpoint(dir / "a.ckpt");
  CHECK(same_params(state.gen.parameters(), back.gen.parameters()));
  CHECK(same_params(state.disc.parameters(), back.disc.parameters()));
  CHECK(back.step == state.step);
  CHECK(back.epoch == state.epoch);
  CHECK(back.rng == state.rng);
  CHECK(back.config == state.config);
  CHECK(back.gen_opt.steps() == state.gen_opt.steps());
  for (std::size_t i = 0; i < state.gen_opt.first_moments().size(); ++i) {
    CHECK(state.gen_opt.first_moments()[i] == back.gen_opt.first_moments()[i]);
    CHECK(state.gen_opt.second_moments()[i] == back.gen_opt.second_moments()[i]);
  }
  save_checkpoint(back, dir / "b.ckpt");
  std::ifstream fa(dir / "a.ckpt", std::ios::binary), fb(dir / "b.ckpt", std::ios::binary);
  CHECK(std::string(std::istreambuf_iterator<char>(fa), {}) == std::string(std::istreambuf_iterator<char>(fb), {}));

  const auto size = fs::file_size(dir / "a.ckpt");
  fs::copy_file(dir / "a.ckpt", dir / "t.ckpt");
  fs::resize_file(dir / "t.ckpt", size / 2);
  CHECK_THROWS_AS(load_checkpoint(dir / "t.ckpt"), LoadError);

  fs::copy_file(dir / "a.ckpt", dir / "v.ckpt");
  {
    std::fstream f(dir / "v.ckpt", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(8);
    const char v = 9;
    f.write(&v, 1);
  }
  try {
    load_checkpoint(dir / "v.ckpt");
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
  fs::remove_all(dir);
}
