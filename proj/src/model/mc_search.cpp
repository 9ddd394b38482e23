#include "mcgan/model/mc_search.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mcgan/model/losses.hpp"

namespace mcgan::model {

using nn::Var;

void McConfig::validate() const {
  if (n < 1) throw ConfigError("mc.n must be >= 1, got " + std::to_string(n));
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("mc.dropout must be in [0,1)");
}

namespace {

template <typename T>
nn::Conv2d<T> frozen(const nn::Conv2d<T>& c) {
  nn::Conv2d<T> out = c;
  out.weight = nn::clone_constant(c.weight);
  out.bias = nn::clone_constant(c.bias);
  return out;
}

template <typename T>
nn::ConvTranspose2d<T> frozen(const nn::ConvTranspose2d<T>& c) {
  nn::ConvTranspose2d<T> out = c;
  out.weight = nn::clone_constant(c.weight);
  out.bias = nn::clone_constant(c.bias);
  return out;
}

}  // namespace

template <typename T>
VirtualGenerator<T> VirtualGenerator<T>::snapshot(const GeneratorParams<T>& generator, double dropout) {
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
  VirtualGenerator<T> gb;
  gb.dropout_ = dropout;
  for (const auto& block : generator.tail.blocks) {
    nn::ResBlock<T> b;
    b.conv_a = frozen(block.conv_a);
    b.conv_b = frozen(block.conv_b);
    gb.tail_.blocks.push_back(std::move(b));
  }
  gb.tail_.up = frozen(generator.tail.up);
  gb.tail_.out = frozen(generator.tail.out);
  return gb;
}

template <typename T>
Var<T> VirtualGenerator<T>::complete(const Var<T>& state, std::uint64_t mask_seed) const {
  if (dropout_ == 0.0) return tail_.forward(state);
  Engine engine(mask_seed);
  std::bernoulli_distribution keep(1.0 - dropout_);
  const T kept = static_cast<T>(1.0 / (1.0 - dropout_));
  std::vector<nn::Tensor<T>> masks;
  masks.reserve(tail_.blocks.size());
  for (std::size_t i = 0; i < tail_.blocks.size(); ++i) {
    nn::Tensor<T> m(state.shape());
    for (auto& v : m.storage()) v = keep(engine) ? kept : T(0);
    masks.push_back(std::move(m));
  }
  return tail_.forward(state, masks);
}

template <typename T>
nn::ParamList<T> VirtualGenerator<T>::parameters() const {
  nn::ParamList<T> list;
  tail_.collect(list);
  return list;
}

template <typename T>
RolloutSet<T> rollout(const VirtualGenerator<T>& gb, const IntermediateState<T>& state, int n, Engine& rng) {
  if (n < 1) throw ConfigError("rollout count must be >= 1, got " + std::to_string(n));
  RolloutSet<T> set;
  set.completions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) set.seeds.push_back(rng());
  for (int i = 0; i < n; ++i) set.completions.push_back(gb.complete(state.features.data, set.seeds[static_cast<std::size_t>(i)]));
  return set;
}

template <typename T>
Var<T> mean_of_rollout_losses(const std::vector<Var<T>>& losses) {
  if (losses.empty()) throw ConfigError("mean of zero rollouts");
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a].item() < losses[b].item(); });
  const Var<T>& ref = losses[order[0]];
  const T inv_n = T(1) / static_cast<T>(losses.size());
  std::vector<Var<T>> terms{ref};
  for (std::size_t i = 1; i < order.size(); ++i)
    terms.push_back(nn::scale(nn::add(losses[order[i]], nn::scale(ref, T(-1))), inv_n));
  return terms.size() == 1 ? ref : nn::sum(terms);
}

template <typename T>
Var<T> adversarial_g_loss(const DiscriminatorParams<T>& disc, const Var<T>& label, const Var<T>& image) {
  const auto outs = discriminate(disc, label, image);
  std::vector<Var<T>> per_scale;
  for (const auto& o : outs) per_scale.push_back(gan_loss_g(o.scores));
  return nn::sum(per_scale);
}

template <typename T>
Var<T> q_value(const RolloutSet<T>& rollouts, const DiscriminatorParams<T>& disc, const Var<T>& label) {
  std::vector<Var<T>> losses;
  losses.reserve(rollouts.completions.size());
  for (const auto& y : rollouts.completions) losses.push_back(adversarial_g_loss(disc, label, y));
  return mean_of_rollout_losses(losses);
}

#define MCGAN_INSTANTIATE_MC(T)                                                                       \
  template class VirtualGenerator<T>;                                                                 \
  template RolloutSet<T> rollout(const VirtualGenerator<T>&, const IntermediateState<T>&, int, Engine&); \
  template Var<T> mean_of_rollout_losses(const std::vector<Var<T>>&);                                 \
  template Var<T> adversarial_g_loss(const DiscriminatorParams<T>&, const Var<T>&, const Var<T>&);    \
  template Var<T> q_value(const RolloutSet<T>&, const DiscriminatorParams<T>&, const Var<T>&);

MCGAN_INSTANTIATE_MC(float)
MCGAN_INSTANTIATE_MC(double)

}  // namespace mcgan::model
