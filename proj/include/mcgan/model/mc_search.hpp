#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mcgan/model/discriminator.hpp"
#include "mcgan/model/generator.hpp"

namespace mcgan::model {

struct McConfig {
  int n = 5;             // rollouts per intermediate state
  double dropout = 0.2;  // drop probability inside the virtual generator
  bool enabled = true;

  void validate() const;
  friend bool operator==(const McConfig&, const McConfig&) = default;
};

/// The fused feature map entering G2's residual blocks.
template <typename T>
struct IntermediateState {
  FeatureMap<T> features;
};

template <typename T>
struct RolloutSet {
  std::vector<nn::Var<T>> completions;  // (3, H, W) each, in [-1, 1]
  std::vector<std::uint64_t> seeds;     // dropout-mask seed per completion
};

/// Frozen copy of the G2 completion path with dropout active. Its parameters
/// are constants, so gradients pass through it to the state but never
/// accumulate on it.
template <typename T>
class VirtualGenerator {
 public:
  static VirtualGenerator snapshot(const GeneratorParams<T>& generator, double dropout);

  /// One completion; masks are drawn from `mask_seed` when dropout > 0.
  nn::Var<T> complete(const nn::Var<T>& state, std::uint64_t mask_seed) const;

  double dropout() const noexcept { return dropout_; }
  nn::ParamList<T> parameters() const;

 private:
  LocalTail<T> tail_;
  double dropout_ = 0.0;
};

/// N completions of `state` with independent masks; seeds come from `rng`.
template <typename T>
RolloutSet<T> rollout(const VirtualGenerator<T>& gb, const IntermediateState<T>& state, int n, Engine& rng);

/// Averages per-rollout losses. Values are summed in ascending order relative
/// to the smallest, so the result is independent of list order and equals the
/// common value exactly when all entries agree.
template <typename T>
nn::Var<T> mean_of_rollout_losses(const std::vector<nn::Var<T>>& losses);

/// Three-scale generator loss of one image under `label`.
template <typename T>
nn::Var<T> adversarial_g_loss(const DiscriminatorParams<T>& disc, const nn::Var<T>& label, const nn::Var<T>& image);

/// Q = (1/N) * sum_n sum_k gan_loss_g(D_k(label, Y^n)).
template <typename T>
nn::Var<T> q_value(const RolloutSet<T>& rollouts, const DiscriminatorParams<T>& disc, const nn::Var<T>& label);

}  // namespace mcgan::model
