#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "gradcheck.hpp"
#include "mcgan/model/losses.hpp"

using namespace mcgan;
using namespace mcgan::model;
using nn::Tensor;
using nn::Var;

namespace {

Var<double> grid(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Var<double>::constant(Tensor<double>({1, 1, n}, std::move(v)));
}

Var<double> filled(double v) { return Var<double>::constant(Tensor<double>({1, 4, 8}, v)); }

}  // namespace

TEST_CASE("gan_loss_d closed forms") {
  CHECK(std::abs(gan_loss_d(filled(0.5), filled(0.5)).item() - 2 * std::log(2.0)) < 1e-12);
  CHECK(gan_loss_d(filled(1 - kLogEps), filled(kLogEps)).item() < 1e-6);
  const std::vector<double> r{0.9, 0.6, 0.7, 0.8};
  const std::vector<double> f{0.1, 0.3, 0.2, 0.4};
  double oracle = 0;
  for (int i = 0; i < 4; ++i) oracle += -std::log(r[i]) / 4 - std::log(1 - f[i]) / 4;
  CHECK(gan_loss_d(grid(r), grid(f)).item() == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(gan_loss_d_real(grid(r)).item() + gan_loss_d_fake(grid(f)).item() == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("gan_loss_g closed forms and clamping") {
  take_clamp_count();
  CHECK(std::abs(gan_loss_g(filled(0.5)).item() - std::log(2.0)) < 1e-12);
  CHECK(gan_loss_g(filled(1 - kLogEps)).item() < 1e-6);
  CHECK(gan_loss_g(filled(kLogEps)).item() == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
  CHECK(gan_loss_g(filled(kLogEps)).item() == doctest::Approx(16.118).epsilon(1e-4));
  CHECK(take_clamp_count() == 0);
  const double zero = gan_loss_g(filled(0.0)).item();
  CHECK(std::isfinite(zero));
  CHECK(take_clamp_count() == 32);
  CHECK(take_clamp_count() == 0);
  CHECK(std::isfinite(gan_loss_d(filled(1.0), filled(1.0)).item()));
}

TEST_CASE("fm_loss") {
  std::vector<Var<double>> a{Var<double>::constant(testing::projection({2, 3, 3}, 1)),
                             Var<double>::constant(testing::projection({4, 2, 2}, 2))};
  std::vector<Var<double>> b{Var<double>::constant(testing::projection({2, 3, 3}, 3)),
                             Var<double>::constant(testing::projection({4, 2, 2}, 4))};
  CHECK(fm_loss(a, a).item() == 0.0);
  CHECK(fm_loss(a, b).item() == doctest::Approx(fm_loss(b, a).item()).epsilon(1e-15));
  CHECK(fm_loss(a, b).item() > 0);

  auto x = Var<double>::constant(Tensor<double>({1, 1, 4}, std::vector<double>{1, 2, 3, 4}));
  auto y = Var<double>::constant(Tensor<double>({1, 1, 4}, std::vector<double>{0, 3, 1, 4}));  // diffs 1,-1,2,0
  CHECK(fm_loss<double>({x}, {y}).item() == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<Var<double>> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca.push_back(nn::scale(a[i], -3.0));
    cb.push_back(nn::scale(b[i], -3.0));
  }
  CHECK(fm_loss(ca, cb).item() == doctest::Approx(3 * fm_loss(a, b).item()).epsilon(1e-12));

  std::vector<Var<double>> short_list{a[0]};
  CHECK_THROWS_AS(fm_loss(a, short_list), ShapeError);
  std::vector<Var<double>> wrong{a[0], Var<double>::constant(Tensor<double>({4, 2, 3}))};
  CHECK_THROWS_AS(fm_loss(a, wrong), ShapeError);
}

TEST_CASE("fm_loss gradient reaches only the fake side") {
  auto real = Var<double>::leaf(testing::projection({2, 2, 2}, 5), true);
  auto fake = Var<double>::leaf(testing::projection({2, 2, 2}, 6), true);
  nn::backward(fm_loss<double>({real}, {fake}));
  CHECK_FALSE(real.has_grad());
  CHECK(fake.has_grad());
}

TEST_CASE("total_g_loss") {
  auto q = Var<double>::constant(Tensor<double>::scalar(2.0794));
  std::array<Var<double>, kNumScales> fm{Var<double>::constant(Tensor<double>::scalar(0.1)),
                                         Var<double>::constant(Tensor<double>::scalar(0.2)),
                                         Var<double>::constant(Tensor<double>::scalar(0.3))};
  CHECK(total_g_loss(q, fm, kDefaultLambda).item() == doctest::Approx(8.0794).epsilon(1e-12));
  CHECK(total_g_loss(q, fm, 0.0).item() == 2.0794);
  CHECK(total_g_value(2.0794, {0.1, 0.2, 0.3}, 10) == doctest::Approx(8.0794).epsilon(1e-12));
  const double t0 = total_g_loss(q, fm, 0.0).item();
  const double t1 = total_g_loss(q, fm, 1.0).item();
  const double t2 = total_g_loss(q, fm, 2.0).item();
  CHECK(t1 - t0 == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(t2 - t1 == doctest::Approx(0.6).epsilon(1e-12));
  CHECK_THROWS_AS(total_g_loss(q, fm, -1.0), ConfigError);
  CHECK(kDefaultLambda == 10.0);
}

TEST_CASE("loss log line") {
  LossBreakdown b;
  b.q = 1.5;
  b.total_g = 2.5;
  const auto j = nlohmann::json::parse(b.to_json_line(7));
  CHECK(j.at("step") == 7);
  CHECK(j.at("q") == 1.5);
  CHECK(j.at("fm").size() == 3);
  CHECK(b.finite());
  b.q = std::nan("");
  CHECK_FALSE(b.finite());
}
