#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "mcgan/model/discriminator.hpp"

namespace mcgan::model {

/// Clamp bound for log arguments.
inline constexpr double kLogEps = 1e-7;
inline constexpr double kDefaultLambda = 10.0;

/// Clamp events since the last call, on this thread.
std::size_t take_clamp_count() noexcept;

/// -mean(log D(s,x)) - mean(log(1 - D(s,G(s)))), scores averaged per patch grid.
template <typename T>
nn::Var<T> gan_loss_d(const nn::Var<T>& scores_real, const nn::Var<T>& scores_fake);

/// Real-side and fake-side halves of gan_loss_d.
template <typename T>
nn::Var<T> gan_loss_d_real(const nn::Var<T>& scores_real);
template <typename T>
nn::Var<T> gan_loss_d_fake(const nn::Var<T>& scores_fake);

/// Non-saturating generator loss -mean(log D(s,G(s))).
template <typename T>
nn::Var<T> gan_loss_g(const nn::Var<T>& scores_fake);

/// sum_i (1/N_i) * ||real_i - fake_i||_1 over the T layers of one discriminator.
/// Real features are detached; only the fake branch receives gradient.
template <typename T>
nn::Var<T> fm_loss(const std::vector<nn::Var<T>>& real_features, const std::vector<nn::Var<T>>& fake_features);

/// Q + lambda * (fm_1 + fm_2 + fm_3). Throws ConfigError for lambda < 0.
template <typename T>
nn::Var<T> total_g_loss(const nn::Var<T>& q, const std::array<nn::Var<T>, kNumScales>& fm, double lambda);

/// Plain-number form of total_g_loss, same summation order.
double total_g_value(double q, const std::array<double, kNumScales>& fm, double lambda);

/// Per-step numbers for the training log.
struct LossBreakdown {
  std::array<double, kNumScales> d_real{};
  std::array<double, kNumScales> d_fake{};
  double q = 0;
  std::array<double, kNumScales> fm{};
  double lambda = kDefaultLambda;
  double total_g = 0;
  double total_d = 0;

  /// One JSON-lines record: {step, d_loss, q, fm: [..], total_g}.
  std::string to_json_line(long step) const;
  bool finite() const;
};

}  // namespace mcgan::model
