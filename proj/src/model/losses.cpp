#include "mcgan/model/losses.hpp"

#include <cmath>

#include "json.hpp"

namespace mcgan::model {

using nn::Var;

namespace {
thread_local std::size_t g_clamped = 0;
}

std::size_t take_clamp_count() noexcept {
  const std::size_t n = g_clamped;
  g_clamped = 0;
  return n;
}

template <typename T>
Var<T> gan_loss_d_real(const Var<T>& scores_real) {
  return nn::neg_mean_log(scores_real, T(kLogEps), &g_clamped);
}

template <typename T>
Var<T> gan_loss_d_fake(const Var<T>& scores_fake) {
  return nn::neg_mean_log1m(scores_fake, T(kLogEps), &g_clamped);
}

template <typename T>
Var<T> gan_loss_d(const Var<T>& scores_real, const Var<T>& scores_fake) {
  return nn::sum<T>({gan_loss_d_real(scores_real), gan_loss_d_fake(scores_fake)});
}

template <typename T>
Var<T> gan_loss_g(const Var<T>& scores_fake) {
  return nn::neg_mean_log(scores_fake, T(kLogEps), &g_clamped);
}

template <typename T>
Var<T> fm_loss(const std::vector<Var<T>>& real_features, const std::vector<Var<T>>& fake_features) {
  if (real_features.size() != fake_features.size())
    throw ShapeError("fm_loss: layer counts differ (" + std::to_string(real_features.size()) + " vs " +
                     std::to_string(fake_features.size()) + ")");
  if (real_features.empty()) throw ShapeError("fm_loss: no feature layers");
  std::vector<Var<T>> terms;
  terms.reserve(real_features.size());
  for (std::size_t i = 0; i < real_features.size(); ++i) {
    if (real_features[i].shape() != fake_features[i].shape())
      throw ShapeError("fm_loss: layer " + std::to_string(i) + " shape " + nn::shape_string(real_features[i].shape()) +
                       " vs " + nn::shape_string(fake_features[i].shape()));
    terms.push_back(nn::l1_mean(nn::detach(real_features[i]), fake_features[i]));
  }
  return nn::sum(terms);
}

template <typename T>
Var<T> total_g_loss(const Var<T>& q, const std::array<Var<T>, kNumScales>& fm, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  const Var<T> fm_sum = nn::sum<T>({fm[0], fm[1], fm[2]});
  return nn::sum<T>({q, nn::scale(fm_sum, static_cast<T>(lambda))});
}

double total_g_value(double q, const std::array<double, kNumScales>& fm, double lambda) {
  return q + lambda * (fm[0] + fm[1] + fm[2]);
}

std::string LossBreakdown::to_json_line(long step) const {
  nlohmann::json j;
  j["step"] = step;
  j["d_loss"] = total_d;
  j["d_real"] = d_real;
  j["d_fake"] = d_fake;
  j["q"] = q;
  j["fm"] = fm;
  j["lambda"] = lambda;
  j["total_g"] = total_g;
  return j.dump();
}

bool LossBreakdown::finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  for (int k = 0; k < kNumScales; ++k)
    if (!ok(d_real[k]) || !ok(d_fake[k]) || !ok(fm[k])) return false;
  return ok(q) && ok(total_g) && ok(total_d);
}

#define MCGAN_INSTANTIATE_LOSSES(T)                                                                 \
  template Var<T> gan_loss_d(const Var<T>&, const Var<T>&);                                         \
  template Var<T> gan_loss_d_real(const Var<T>&);                                                   \
  template Var<T> gan_loss_d_fake(const Var<T>&);                                                   \
  template Var<T> gan_loss_g(const Var<T>&);                                                        \
  template Var<T> fm_loss(const std::vector<Var<T>>&, const std::vector<Var<T>>&);                  \
  template Var<T> total_g_loss(const Var<T>&, const std::array<Var<T>, kNumScales>&, double);

MCGAN_INSTANTIATE_LOSSES(float)
MCGAN_INSTANTIATE_LOSSES(double)

}  // namespace mcgan::model
