#pragma once

#include <cmath>
#include <cstdint>

#include "mcgan/nn/layers.hpp"

namespace mcgan::nn {

struct AdamHyper {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed parameter list. Moment buffers are index-aligned with it.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamList<T> params, AdamHyper hyper) : params_(std::move(params)), hyper_(hyper) {
    for (const auto& p : params_) {
      m_.emplace_back(p.var.shape());
      v_.emplace_back(p.var.shape());
    }
  }

  /// Applies one update with learning rate `lr`; parameters without a gradient
  /// are skipped.
  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(hyper_.beta1), b2 = static_cast<T>(hyper_.beta2);
    const T step_size = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(hyper_.eps);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Var<T> var = params_[i].var;
      if (!var.has_grad()) continue;
      const auto& g = var.grad();
      auto& w = var.mutable_value();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = b1 * m[j] + (T(1) - b1) * g[j];
        v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
        w[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_bc2) + eps);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) {
      Var<T> v = p.var;
      v.zero_grad();
    }
  }

  const ParamList<T>& params() const noexcept { return params_; }
  const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }
  std::vector<Tensor<T>>& first_moments() noexcept { return m_; }
  std::vector<Tensor<T>>& second_moments() noexcept { return v_; }
  std::int64_t steps() const noexcept { return t_; }
  void set_steps(std::int64_t t) noexcept { t_ = t; }
  const AdamHyper& hyper() const noexcept { return hyper_; }

 private:
  ParamList<T> params_;
  AdamHyper hyper_;
  std::vector<Tensor<T>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace mcgan::nn
