#include "mcgan/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "mcgan/data/manifest.hpp"
#include "mcgan/data/png_io.hpp"

namespace mcgan::train {

using nn::Var;
namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("train.lr0 must be > 0");
  if (epochs_constant < 0 || epochs_decay < 0 || total_epochs() < 1) throw ConfigError("train epochs must total >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must be in [0,1)");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("train.lambda must be >= 0");
  if (checkpoint_every < 0 || pretrain_epochs < 0) throw ConfigError("train cadences must be >= 0");
  mc.validate();
}

TrainConfig TrainConfig::preset(std::string_view name) {
  TrainConfig c;
  if (name == "paper") {
    c.lr0 = kPaperLearningRate;
  } else if (name == "safe") {
    c.lr0 = kSafeLearningRate;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected paper|safe)");
  }
  return c;
}

double lr_at(int epoch, const TrainConfig& config) {
  if (epoch < 0 || epoch > config.total_epochs())
    throw ConfigError("epoch " + std::to_string(epoch) + " outside schedule [0," + std::to_string(config.total_epochs()) + "]");
  if (epoch < config.epochs_constant) return config.lr0;
  if (config.epochs_decay == 0) return 0.0;
  const double progress = static_cast<double>(epoch - config.epochs_constant) / config.epochs_decay;
  return config.lr0 * (1.0 - progress);
}

Sample make_sample(const data::LabelMap& label, const data::RgbImage& image, std::string id) {
  if (label.width() != image.width() || label.height() != image.height())
    throw ShapeError("sample " + id + ": label and image sizes differ");
  return Sample{std::move(id), data::one_hot<float>(label), data::image_to_tensor<float>(image)};
}

std::vector<Sample> load_samples(const fs::path& manifest_file, std::string_view split) {
  if (split != "train" && split != "val" && split != "all") throw ConfigError("data.split must be train|val|all");
  const auto manifest = data::read_manifest(manifest_file);
  const fs::path base = manifest_file.parent_path();
  std::vector<Sample> out;
  for (const auto& e : manifest.entries) {
    if (split != "all" && e.split != split) continue;
    out.push_back(make_sample(data::read_label_png(base / e.label), data::read_image_png(base / e.image), e.image));
  }
  if (out.empty()) throw InputError("no samples in split '" + std::string(split) + "' of " + manifest_file.string());
  return out;
}

namespace {

void copy_moments(const nn::Adam<float>& from, nn::Adam<float>& to) {
  to.first_moments() = from.first_moments();
  to.second_moments() = from.second_moments();
  to.set_steps(from.steps());
}

nn::AdamHyper hyper_of(const TrainConfig& c) { return {c.beta1, c.beta2, 1e-8}; }

/// Marks a parameter list as constant for the lifetime of the guard.
class FreezeGuard {
 public:
  explicit FreezeGuard(nn::ParamList<float> params) : params_(std::move(params)) {
    for (auto& p : params_) p.var.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.var.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  nn::ParamList<float> params_;
};

nn::ParamList<float> local_parameters(const model::GeneratorParams<float>& gen) {
  nn::ParamList<float> out;
  for (auto& p : gen.parameters())
    if (p.name.rfind("gen/g2/", 0) == 0) out.push_back(p);
  return out;
}

std::string batch_ids(std::span<const Sample> batch) {
  std::string ids;
  for (const auto& s : batch) {
    if (!ids.empty()) ids += ",";
    ids += s.id;
  }
  return ids;
}

}  // namespace

TrainState TrainState::clone() const {
  TrainState s;
  s.config = config;
  s.epoch = epoch;
  s.step = step;
  s.gen = gen.clone();
  s.disc = disc.clone();
  s.gen_opt = nn::Adam<float>(s.gen.parameters(), gen_opt.hyper());
  s.disc_opt = nn::Adam<float>(s.disc.parameters(), disc_opt.hyper());
  copy_moments(gen_opt, s.gen_opt);
  copy_moments(disc_opt, s.disc_opt);
  s.rng = rng;
  return s;
}

TrainState init_train_state(const model::GeneratorConfig& gen, const model::DiscriminatorConfig& disc,
                            const TrainConfig& config) {
  config.validate();
  if (disc.input_channels != gen.label_channels + 3)
    throw ConfigError("discriminator input channels must equal label channels + 3");
  TrainState s;
  s.config = config;
  Engine gen_rng(split_seed(config.seed, "init-generator"));
  Engine disc_rng(split_seed(config.seed, "init-discriminator"));
  s.gen = model::init_generator<float>(gen, gen_rng);
  s.disc = model::init_discriminator<float>(disc, disc_rng);
  s.gen_opt = nn::Adam<float>(s.gen.parameters(), hyper_of(config));
  s.disc_opt = nn::Adam<float>(s.disc.parameters(), hyper_of(config));
  s.rng = Engine(split_seed(config.seed, "train-rollouts"));
  return s;
}

namespace {

Var<float> rollout_term(const model::VirtualGenerator<float>& gb, const model::DiscriminatorParams<float>& disc,
                        const Var<float>& label, const model::FeatureMap<float>& fused, int n, Engine& rng) {
  const auto rollouts = model::rollout(gb, model::IntermediateState<float>{fused}, n, rng);
  return model::q_value(rollouts, disc, label);
}

}  // namespace

double plain_adversarial_term(const TrainState& state, const Sample& sample) {
  nn::NoGradGuard no_grad;
  const auto label = Var<float>::constant(sample.label);
  const auto out = model::generate(state.gen, label);
  return model::adversarial_g_loss(state.disc, label, out.image).item();
}

double rollout_adversarial_term(const TrainState& state, const Sample& sample, std::uint64_t seed) {
  nn::NoGradGuard no_grad;
  const auto label = Var<float>::constant(sample.label);
  const auto out = model::generate(state.gen, label);
  const auto gb = model::VirtualGenerator<float>::snapshot(state.gen, state.config.mc.dropout);
  Engine rng(seed);
  return rollout_term(gb, state.disc, label, out.fused, state.config.mc.n, rng).item();
}

StepResult train_step(TrainState& state, std::span<const Sample> batch) {
  if (batch.empty()) throw InputError("empty training batch");
  const auto& cfg = state.config;
  StepResult result;
  result.lr = lr_at(state.epoch, cfg);
  auto& lb = result.losses;
  lb.lambda = cfg.lambda;
  const float inv_b = 1.0F / static_cast<float>(batch.size());
  model::take_clamp_count();

  // Discriminator half-step: generator runs without a graph.
  {
    state.disc_opt.zero_grad();
    std::vector<Var<float>> terms;
    for (const auto& sample : batch) {
      const auto label = Var<float>::constant(sample.label);
      const auto real = Var<float>::constant(sample.image);
      Var<float> fake;
      {
        nn::NoGradGuard no_grad;
        fake = nn::detach(model::generate(state.gen, label).image);
      }
      const auto real_out = model::discriminate(state.disc, label, real);
      const auto fake_out = model::discriminate(state.disc, label, fake);
      for (int k = 0; k < model::kNumScales; ++k) {
        const auto r = model::gan_loss_d_real(real_out[k].scores);
        const auto f = model::gan_loss_d_fake(fake_out[k].scores);
        lb.d_real[k] += r.item() * inv_b;
        lb.d_fake[k] += f.item() * inv_b;
        terms.push_back(r);
        terms.push_back(f);
      }
    }
    const auto d_loss = nn::scale(nn::sum(terms), inv_b);
    lb.total_d = d_loss.item();
    if (!std::isfinite(lb.total_d))
      throw NumericError("non-finite discriminator loss at step " + std::to_string(state.step) + "; batch ids: " + batch_ids(batch));
    nn::backward(d_loss);
    state.disc_opt.step(result.lr);
  }

  // Generator half-step: discriminator parameters are frozen constants.
  {
    state.gen_opt.zero_grad();
    FreezeGuard freeze_disc(state.disc.parameters());
    const bool pretraining = state.gen.config.pretrain_global && state.epoch < cfg.pretrain_epochs;
    std::optional<FreezeGuard> freeze_local;
    if (pretraining) freeze_local.emplace(local_parameters(state.gen));

    std::optional<model::VirtualGenerator<float>> gb;
    if (cfg.mc.enabled) gb = model::VirtualGenerator<float>::snapshot(state.gen, cfg.mc.dropout);

    std::vector<Var<float>> terms;
    double q_sum = 0;
    std::array<double, model::kNumScales> fm_sum{};
    for (const auto& sample : batch) {
      const auto label = Var<float>::constant(sample.label);
      const auto real = Var<float>::constant(sample.image);
      const auto out = model::generate(state.gen, label);
      const Var<float> q = gb ? rollout_term(*gb, state.disc, label, out.fused, cfg.mc.n, state.rng)
                              : model::adversarial_g_loss(state.disc, label, out.image);
      std::array<model::DiscriminatorOutput<float>, model::kNumScales> real_out;
      {
        nn::NoGradGuard no_grad;
        real_out = model::discriminate(state.disc, label, real);
      }
      const auto fake_out = model::discriminate(state.disc, label, out.image);
      std::array<Var<float>, model::kNumScales> fm;
      for (int k = 0; k < model::kNumScales; ++k) {
        fm[k] = model::fm_loss(real_out[k].features, fake_out[k].features);
        fm_sum[k] += fm[k].item();
      }
      q_sum += q.item();
      terms.push_back(model::total_g_loss(q, fm, cfg.lambda));
    }
    const auto g_loss = nn::scale(nn::sum(terms), inv_b);
    lb.q = q_sum / static_cast<double>(batch.size());
    for (int k = 0; k < model::kNumScales; ++k) lb.fm[k] = fm_sum[k] / static_cast<double>(batch.size());
    lb.total_g = model::total_g_value(lb.q, lb.fm, lb.lambda);
    if (!std::isfinite(g_loss.item()) || !lb.finite())
      throw NumericError("non-finite generator loss at step " + std::to_string(state.step) + "; batch ids: " + batch_ids(batch));
    nn::backward(g_loss);
    state.gen_opt.step(result.lr);
  }

  ++state.step;
  result.clamped = model::take_clamp_count();
  return result;
}

int steps_per_epoch(std::size_t samples, int batch_size) {
  if (samples == 0 || batch_size < 1) throw ConfigError("steps_per_epoch needs samples and batch size >= 1");
  return static_cast<int>((samples + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size));
}

std::vector<std::size_t> batch_indices(std::size_t samples, int batch_size, std::uint64_t seed, std::int64_t step) {
  const int spe = steps_per_epoch(samples, batch_size);
  const auto epoch = static_cast<std::uint64_t>(step / spe);
  const auto within = static_cast<std::size_t>(step % spe);
  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng(split_seed(seed, "epoch-order", epoch));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t begin = within * static_cast<std::size_t>(batch_size);
  const std::size_t end = std::min(samples, begin + static_cast<std::size_t>(batch_size));
  return {order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end)};
}

void run_training(TrainState& state, const std::vector<Sample>& samples, const RunOptions& options) {
  const int spe = steps_per_epoch(samples.size(), state.config.batch_size);
  std::int64_t end = static_cast<std::int64_t>(state.config.total_epochs()) * spe;
  if (options.max_steps > 0) end = std::min(end, options.max_steps);
  std::vector<Sample> batch;
  while (state.step < end) {
    state.epoch = static_cast<int>(state.step / spe);
    batch.clear();
    for (auto i : batch_indices(samples.size(), state.config.batch_size, state.config.seed, state.step)) batch.push_back(samples[i]);
    const auto result = train_step(state, batch);
    if (options.on_step) options.on_step(state, result);
    if (state.step % spe == 0 && options.on_epoch_end) options.on_epoch_end(state);
  }
  state.epoch = static_cast<int>(state.step / spe);
}

data::RgbImage infer_image(const model::GeneratorParams<float>& gen, const data::LabelMap& label) {
  nn::NoGradGuard no_grad;
  const auto out = model::generate(gen, Var<float>::constant(data::one_hot<float>(label)));
  return data::tensor_to_image(out.image.value());
}

}  // namespace mcgan::train
