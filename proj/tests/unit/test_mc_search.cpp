#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mcgan/core/rng.hpp"
#include "mcgan/model/mc_search.hpp"

using namespace mcgan;
using namespace mcgan::model;
using nn::Var;

namespace {

GeneratorConfig small_gen() {
  GeneratorConfig c;
  c.width = 32;
  c.height = 16;
  c.fusion_channels = 4;
  c.local_channels = 2;
  c.global_blocks = 1;
  c.local_blocks = 2;
  return c;
}

DiscriminatorConfig small_disc() {
  DiscriminatorConfig c;
  c.stem_channels = 4;
  c.channels = 4;
  return c;
}

struct Fixture {
  GeneratorParams<float> gen;
  DiscriminatorParams<float> disc;
  Var<float> label;
  GeneratorOutput<float> out;
  Fixture() {
    Engine rng(8);
    gen = init_generator<float>(small_gen(), rng);
    disc = init_discriminator<float>(small_disc(), rng);
    auto l = testing::projection({4, 16, 32}, 3);
    for (auto& v : l.values()) v = v > 0 ? 1.0 : 0.0;
    label = Var<float>::constant(l.cast<float>());
    out = generate(gen, label);
  }
};

}  // namespace

TEST_CASE("snapshot copies values and then stays frozen") {
  Fixture f;
  auto gb = VirtualGenerator<float>::snapshot(f.gen, 0.0);
  nn::ParamList<float> tail;
  f.gen.tail.collect(tail);
  CHECK(nn::param_checksum(gb.parameters()) == nn::param_checksum(tail));
  const auto before = gb.complete(f.out.fused.data, 1).value();
  for (const auto& p : f.gen.parameters()) p.var.node()->value.fill(0.3F);
  CHECK(gb.complete(f.out.fused.data, 1).value() == before);
  for (const auto& p : gb.parameters()) CHECK_FALSE(p.var.requires_grad());
}

TEST_CASE("dropout 0 reproduces the plain tail") {
  Fixture f;
  auto gb = VirtualGenerator<float>::snapshot(f.gen, 0.0);
  CHECK(gb.complete(f.out.fused.data, 123).value() == f.out.image.value());
  Engine rng(1);
  auto set = rollout(gb, IntermediateState<float>{f.out.fused}, 1, rng);
  REQUIRE(set.completions.size() == 1);
  CHECK(set.completions[0].value() == f.out.image.value());
}

TEST_CASE("rollout cardinality, distinctness and reproducibility") {
  Fixture f;
  auto gb = VirtualGenerator<float>::snapshot(f.gen, 0.2);
  IntermediateState<float> state{f.out.fused};
  for (int n : {1, 3, 5, 7, 9}) {
    Engine rng(n);
    auto set = rollout(gb, state, n, rng);
    CHECK(set.completions.size() == static_cast<std::size_t>(n));
    CHECK(set.seeds.size() == static_cast<std::size_t>(n));
  }
  Engine a(42), b(42);
  auto s1 = rollout(gb, state, 3, a);
  auto s2 = rollout(gb, state, 3, b);
  CHECK(s1.seeds == s2.seeds);
  for (int i = 0; i < 3; ++i) CHECK(s1.completions[i].value() == s2.completions[i].value());
  CHECK_FALSE(s1.completions[0].value() == s1.completions[1].value());
  Engine c(1);
  CHECK_THROWS_AS(rollout(gb, state, 0, c), ConfigError);
}

TEST_CASE("Q with constant 0.5 discriminators is 3 ln 2") {
  Fixture f;
  DiscriminatorParams<double> zero(small_disc());
  auto label = Var<double>::constant(f.label.value().cast<double>());
  RolloutSet<double> set;
  for (int i = 0; i < 4; ++i) set.completions.push_back(Var<double>::constant(testing::projection({3, 16, 32}, i)));
  CHECK(std::abs(q_value(set, zero, label).item() - 3 * std::log(2.0)) < 1e-12);
}

TEST_CASE("Q mean properties") {
  Fixture f;
  auto img_a = f.out.image;
  auto img_b = Var<float>::constant(testing::projection({3, 16, 32}, 77).cast<float>());
  const double la = adversarial_g_loss(f.disc, f.label, img_a).item();
  const double lb = adversarial_g_loss(f.disc, f.label, img_b).item();

  RolloutSet<float> same;
  for (int i = 0; i < 5; ++i) same.completions.push_back(img_a);
  RolloutSet<float> single;
  single.completions.push_back(img_a);
  CHECK(q_value(same, f.disc, f.label).item() == q_value(single, f.disc, f.label).item());
  CHECK(q_value(single, f.disc, f.label).item() == static_cast<float>(la));

  RolloutSet<float> two;
  two.completions = {img_a, img_b};
  CHECK(q_value(two, f.disc, f.label).item() == doctest::Approx((la + lb) / 2).epsilon(1e-6));

  RolloutSet<float> ab, ba;
  ab.completions = {img_a, img_b, img_a, img_b, img_b};
  ba.completions = {img_b, img_b, img_a, img_b, img_a};
  CHECK(q_value(ab, f.disc, f.label).item() == q_value(ba, f.disc, f.label).item());
}

TEST_CASE("Q gradient reaches G but not the virtual generator") {
  Fixture f;
  auto gb = VirtualGenerator<float>::snapshot(f.gen, 0.2);
  Engine rng(3);
  auto out = generate(f.gen, f.label);
  auto set = rollout(gb, IntermediateState<float>{out.fused}, 3, rng);
  nn::backward(q_value(set, f.disc, f.label));
  for (const auto& p : gb.parameters()) CHECK_FALSE(p.var.has_grad());
  bool front_grad = false;
  for (const auto& p : f.gen.parameters())
    if (p.name.rfind("gen/g2/front", 0) == 0 && p.var.has_grad()) front_grad = true;
  CHECK(front_grad);
}

TEST_CASE("Q with dropout 0 is a deterministic function of params and label") {
  Fixture f;
  auto gb = VirtualGenerator<float>::snapshot(f.gen, 0.0);
  Engine r1(1), r2(2);
  auto q1 = q_value(rollout(gb, IntermediateState<float>{f.out.fused}, 3, r1), f.disc, f.label).item();
  auto q2 = q_value(rollout(gb, IntermediateState<float>{f.out.fused}, 3, r2), f.disc, f.label).item();
  CHECK(q1 == q2);
}
