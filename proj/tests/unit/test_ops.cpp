#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mcgan/nn/ops.hpp"

using namespace mcgan;
using namespace mcgan::nn;

namespace {

Tensor<double> random_tensor(const Shape& shape, std::uint64_t seed) { return testing::projection(shape, seed); }

Tensor<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b, int s, int p) {
  const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int cout = w.dim(0), k = w.dim(2);
  const int oh = conv_out_size(h, k, s, p), ow = conv_out_size(wd, k, s, p);
  Tensor<double> y({cout, oh, ow});
  for (int o = 0; o < cout; ++o)
    for (int yy = 0; yy < oh; ++yy)
      for (int xx = 0; xx < ow; ++xx) {
        double acc = b[o];
        for (int c = 0; c < cin; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = yy * s - p + ky, ix = xx * s - p + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              acc += w[((static_cast<std::size_t>(o) * cin + c) * k + ky) * k + kx] * x.at(c, iy, ix);
            }
        y.at(o, yy, xx) = acc;
      }
  return y;
}

Tensor<double> conv_transpose_oracle(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b, int s,
                                     int p, int op) {
  const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int cout = w.dim(1), k = w.dim(2);
  const int oh = conv_transpose_out_size(h, k, s, p, op), ow = conv_transpose_out_size(wd, k, s, p, op);
  Tensor<double> y({cout, oh, ow});
  for (int o = 0; o < cout; ++o)
    for (int yy = 0; yy < oh; ++yy)
      for (int xx = 0; xx < ow; ++xx) y.at(o, yy, xx) = b[o];
  for (int c = 0; c < cin; ++c)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < wd; ++ix)
        for (int o = 0; o < cout; ++o)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int oy = iy * s - p + ky, ox = ix * s - p + kx;
              if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
              y.at(o, oy, ox) += w[((static_cast<std::size_t>(c) * cout + o) * k + ky) * k + kx] * x.at(c, iy, ix);
            }
  return y;
}

void require_close(const Tensor<double>& a, const Tensor<double>& b, double tol) {
  REQUIRE(a.shape() == b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(a[i] - b[i]) <= tol * (1 + std::abs(b[i])));
}

// Scalar probe: mean(f(x) * R).
Var<double> probe(const Var<double>& y, std::uint64_t seed) { return mean(mul_constant(y, random_tensor(y.shape(), seed))); }

void check_input_grad(const std::function<Var<double>(const Var<double>&)>& f, const Shape& shape, double tol = 1e-6) {
  auto x = Var<double>::leaf(random_tensor(shape, 11), true);
  ParamList<double> params{{"x/in/value/v", x}};
  const auto errs = testing::gradient_check(params, [&] { return probe(f(x), 5); });
  for (const auto& e : errs) CHECK(e.rel_error < tol);
}

}  // namespace

TEST_CASE("conv2d matches a direct loop") {
  for (auto [k, s, p] : {std::tuple{3, 1, 1}, std::tuple{3, 2, 1}, std::tuple{7, 1, 3}, std::tuple{1, 1, 0}}) {
    auto x = random_tensor({3, 9, 10}, 1);
    auto w = random_tensor({4, 3, k, k}, 2);
    auto b = random_tensor({4}, 3);
    auto y = conv2d(Var<double>::constant(x), Var<double>::constant(w), Var<double>::constant(b), s, p);
    require_close(y.value(), conv_oracle(x, w, b, s, p), 1e-12);
  }
}

TEST_CASE("conv_transpose2d matches a scatter loop") {
  auto x = random_tensor({3, 5, 6}, 4);
  auto w = random_tensor({3, 2, 3, 3}, 5);
  auto b = random_tensor({2}, 6);
  auto y = conv_transpose2d(Var<double>::constant(x), Var<double>::constant(w), Var<double>::constant(b), 2, 1, 1);
  CHECK(y.shape() == Shape{2, 10, 12});
  require_close(y.value(), conv_transpose_oracle(x, w, b, 2, 1, 1), 1e-12);
}

TEST_CASE("instance_norm normalizes each channel") {
  auto x = Var<double>::constant(random_tensor({3, 6, 5}, 7));
  auto y = instance_norm(x, 0.0).value();
  for (int c = 0; c < 3; ++c) {
    double m = 0, v = 0;
    for (int i = 0; i < 30; ++i) m += y[c * 30 + i];
    m /= 30;
    for (int i = 0; i < 30; ++i) v += (y[c * 30 + i] - m) * (y[c * 30 + i] - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 30 == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("avg_pool matches the window mean and rejects indivisible sizes") {
  auto x = random_tensor({2, 8, 8}, 9);
  auto y = avg_pool(Var<double>::constant(x), 2).value();
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double m = (x.at(c, 2 * i, 2 * j) + x.at(c, 2 * i + 1, 2 * j) + x.at(c, 2 * i, 2 * j + 1) +
                          x.at(c, 2 * i + 1, 2 * j + 1)) / 4;
        CHECK(y.at(c, i, j) == doctest::Approx(m).epsilon(1e-14));
      }
  CHECK_THROWS_AS(avg_pool(Var<double>::constant(Tensor<double>({1, 6, 5})), 2), ShapeError);
}

TEST_CASE("clamped logs count clamps and stay finite") {
  std::size_t clamped = 0;
  auto x = Var<double>::constant(Tensor<double>({1, 1, 2}, std::vector<double>{0.0, 1.0}));
  const double a = neg_mean_log(x, 1e-7, &clamped).item();
  const double b = neg_mean_log1m(x, 1e-7, &clamped).item();
  CHECK(clamped == 4);
  CHECK(std::isfinite(a));
  CHECK(std::isfinite(b));
  CHECK(a == doctest::Approx((-std::log(1e-7) - std::log(1 - 1e-7)) / 2));
}

TEST_CASE("gradients of each op match central differences") {
  const Shape s{2, 4, 6};
  check_input_grad([](const Var<double>& x) { return instance_norm(x, 1e-5); }, s);
  check_input_grad([](const Var<double>& x) { return tanh(x); }, s);
  check_input_grad([](const Var<double>& x) { return sigmoid(x); }, s);
  check_input_grad([](const Var<double>& x) { return leaky_relu(x, 0.2); }, s);
  check_input_grad([](const Var<double>& x) { return relu(x); }, s);
  check_input_grad([](const Var<double>& x) { return avg_pool(x, 2); }, s);
  check_input_grad([](const Var<double>& x) { return scale(add(x, x), 0.5); }, s);
  check_input_grad([](const Var<double>& x) { return concat_channels(x, tanh(x)); }, s);
  check_input_grad(
      [](const Var<double>& x) {
        auto w = Var<double>::constant(random_tensor({3, 2, 3, 3}, 21));
        auto b = Var<double>::constant(random_tensor({3}, 22));
        return conv2d(x, w, b, 2, 1);
      },
      s);
  check_input_grad(
      [](const Var<double>& x) {
        auto w = Var<double>::constant(random_tensor({2, 3, 3, 3}, 23));
        auto b = Var<double>::constant(random_tensor({3}, 24));
        return conv_transpose2d(x, w, b, 2, 1, 1);
      },
      s);
  check_input_grad([](const Var<double>& x) { return l1_mean(x, Var<double>::constant(random_tensor(x.shape(), 3))); },
                   s);
  check_input_grad([](const Var<double>& x) { return neg_mean_log(sigmoid(x), 1e-7); }, s);
  check_input_grad([](const Var<double>& x) { return neg_mean_log1m(sigmoid(x), 1e-7); }, s);
}

TEST_CASE("conv weight and bias gradients match central differences") {
  auto x = Var<double>::constant(random_tensor({2, 5, 4}, 31));
  auto w = Var<double>::leaf(random_tensor({3, 2, 3, 3}, 32), true);
  auto b = Var<double>::leaf(random_tensor({3}, 33), true);
  auto wt = Var<double>::leaf(random_tensor({3, 2, 3, 3}, 34), true);
  auto bt = Var<double>::leaf(random_tensor({2}, 35), true);
  ParamList<double> params{{"p/conv/w/weight", w}, {"p/conv/b/bias", b}, {"p/convt/w/weight", wt}, {"p/convt/b/bias", bt}};
  const auto errs =
      testing::gradient_check(params, [&] { return probe(conv_transpose2d(conv2d(x, w, b, 1, 1), wt, bt, 2, 1, 1), 8); });
  for (const auto& e : errs) CHECK(e.rel_error < 1e-6);
}

TEST_CASE("no graph is recorded under NoGradGuard") {
  auto x = Var<double>::leaf(random_tensor({1, 2, 2}, 1), true);
  NoGradGuard ng;
  auto y = tanh(x);
  CHECK(y.node()->parents.empty());
  CHECK_FALSE(y.requires_grad());
}
