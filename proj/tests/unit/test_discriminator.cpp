#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mcgan/core/rng.hpp"
#include "mcgan/model/discriminator.hpp"
#include "mcgan/model/losses.hpp"

using namespace mcgan;
using namespace mcgan::model;
using nn::Var;

namespace {

DiscriminatorConfig tiny_disc() {
  DiscriminatorConfig c;
  c.stem_channels = 4;
  c.channels = 4;
  return c;
}

template <typename T>
std::pair<Var<T>, Var<T>> inputs(int w, int h, std::uint64_t seed) {
  auto label = testing::projection({4, h, w}, seed);
  for (auto& v : label.values()) v = v > 0 ? 1.0 : 0.0;
  return {Var<T>::constant(label.template cast<T>()), Var<T>::constant(testing::projection({3, h, w}, seed + 1).template cast<T>())};
}

std::vector<nn::Shape> shapes(const nn::ParamList<float>& params) {
  std::vector<nn::Shape> out;
  for (const auto& p : params) out.push_back(p.var.shape());
  return out;
}

}  // namespace

TEST_CASE("stem is pure and halves the resolution") {
  Engine rng(1);
  auto d = init_discriminator<float>(tiny_disc(), rng);
  auto [label, image] = inputs<float>(64, 32, 3);
  auto a = shared_stem(d, label, image);
  auto b = shared_stem(d, label, image);
  CHECK(a.data.value() == b.data.value());
  CHECK(a.data.shape() == nn::Shape{4, 32 / kStemStride, 64 / kStemStride});
  auto [l2, i2] = inputs<float>(32, 32, 3);
  CHECK_THROWS_AS(shared_stem(d, label, i2), ShapeError);
}

TEST_CASE("pyramid levels") {
  FeatureMap<double> f{Var<double>::constant(testing::projection({2, 32, 64}, 1)), 1};
  auto p = build_pyramid(f);
  CHECK(p.levels[0].data.shape() == nn::Shape{2, 32, 64});
  CHECK(p.levels[1].data.shape() == nn::Shape{2, 16, 32});
  CHECK(p.levels[2].data.shape() == nn::Shape{2, 8, 16});
  CHECK(p.levels[0].scale == 1);
  CHECK(p.levels[1].scale == 2);
  CHECK(p.levels[2].scale == 4);

  FeatureMap<double> c{Var<double>::constant(nn::Tensor<double>({1, 8, 8}, 0.375)), 1};
  for (const auto& l : build_pyramid(c).levels)
    for (double v : l.data.value().values()) CHECK(v == 0.375);

  FeatureMap<double> odd{Var<double>::constant(nn::Tensor<double>({1, 6, 8})), 1};
  CHECK_THROWS_AS(build_pyramid(odd), ShapeError);
}

TEST_CASE("scale discriminators share a topology") {
  for (int layers : {2, 3}) {
    auto c = tiny_disc();
    c.layers = layers;
    DiscriminatorParams<float> d(c);
    CHECK(shapes(d.scale_parameters(0)) == shapes(d.scale_parameters(1)));
    CHECK(shapes(d.scale_parameters(1)) == shapes(d.scale_parameters(2)));
  }
}

TEST_CASE("zero parameters give 0.5 scores") {
  DiscriminatorParams<float> d(tiny_disc());
  auto [label, image] = inputs<float>(64, 32, 5);
  for (const auto& o : discriminate(d, label, image)) {
    for (float v : o.scores.value().values()) REQUIRE(v == 0.5F);
    CHECK(o.features.size() == 4);
  }
}

TEST_CASE("score grid follows the receptive stride") {
  Engine rng(2);
  auto d = init_discriminator<float>(tiny_disc(), rng);
  FeatureMap<float> level{Var<float>::constant(nn::Tensor<float>({4, 32, 64}, 0.1F)), 1};
  auto out = d_forward(d.scales[0], level);
  CHECK(d.config.receptive_stride() == 8);
  CHECK(out.scores.shape() == nn::Shape{1, 32 / 8, 64 / 8});
  for (float v : out.scores.value().values()) CHECK((v > 0.0F && v < 1.0F));
  CHECK_THROWS_AS(d_forward(d.scales[1], level), ConfigError);
}

TEST_CASE("discriminator gradients match central differences") {
  Engine rng(3);
  auto d = init_discriminator<double>(tiny_disc(), rng);
  for (const auto& p : d.parameters())
    for (auto& v : p.var.node()->value.values()) v *= 10;
  auto [label, image] = inputs<double>(32, 16, 9);
  auto loss = [&] {
    std::vector<Var<double>> terms;
    std::uint64_t seed = 100;
    for (const auto& o : discriminate(d, label, image)) {
      terms.push_back(nn::mean(nn::mul_constant(o.logits, testing::projection(o.logits.shape(), seed++))));
      for (const auto& f : o.features) terms.push_back(nn::mean(nn::mul_constant(f, testing::projection(f.shape(), seed++))));
    }
    return nn::sum(terms);
  };
  const auto errs = testing::gradient_check(d.parameters(), loss);
  CHECK(errs.size() == 4);
  for (const auto& e : errs) {
    INFO(e.group, " rel=", e.rel_error);
    CHECK(e.analytic_norm > 0);
    CHECK(e.rel_error < 1e-4);
  }
}

TEST_CASE("each branch alone reaches the stem") {
  Engine rng(4);
  auto d = init_discriminator<double>(tiny_disc(), rng);
  auto [label, image] = inputs<double>(32, 16, 1);
  for (int k = 0; k < kNumScales; ++k) {
    for (const auto& p : d.parameters()) p.var.node()->grad = nn::Tensor<double>();
    auto outs = discriminate(d, label, image);
    nn::backward(gan_loss_g(outs[k].scores));
    double norm = 0;
    for (const auto& p : d.stem_parameters())
      for (double g : p.var.grad().values()) norm += g * g;
    CHECK(norm > 0);
    for (int j = 0; j < kNumScales; ++j) {
      if (j == k) continue;
      for (const auto& p : d.scale_parameters(j)) CHECK_FALSE(p.var.has_grad());
    }
  }
}

TEST_CASE("branch normalization option") {
  auto cfg = tiny_disc();
  Engine r1(4), r2(4);
  auto plain = init_discriminator<double>(cfg, r1);
  cfg.norm = true;
  auto normed = init_discriminator<double>(cfg, r2);
  REQUIRE(plain.parameters().size() == normed.parameters().size());
  auto [label, image] = inputs<double>(64, 32, 9);
  const auto a = discriminate(plain, label, image);
  const auto b = discriminate(normed, label, image);
  for (int k = 0; k < kNumScales; ++k) {
    // Level input and first conv are untouched; later convs are normalized.
    CHECK(std::ranges::equal(a[k].features[0].value().values(), b[k].features[0].value().values()));
    CHECK(std::ranges::equal(a[k].features[1].value().values(), b[k].features[1].value().values()));
    CHECK_FALSE(std::ranges::equal(a[k].features[2].value().values(), b[k].features[2].value().values()));
  }
  // At N(0, 0.02) init the unnormalized map is tiny; the normalized one is O(1).
  double ea = 0, eb = 0;
  for (double v : a[0].features[2].value().values()) ea += v * v;
  for (double v : b[0].features[2].value().values()) eb += v * v;
  CHECK(eb > 100 * ea);
}
