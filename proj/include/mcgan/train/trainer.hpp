#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcgan/model/discriminator.hpp"
#include "mcgan/model/generator.hpp"
#include "mcgan/model/losses.hpp"
#include "mcgan/model/mc_search.hpp"
#include "mcgan/nn/adam.hpp"

namespace mcgan::train {

inline constexpr double kPaperLearningRate = 0.05;
inline constexpr double kSafeLearningRate = 2e-4;

struct TrainConfig {
  double lr0 = kPaperLearningRate;
  int epochs_constant = 100;
  int epochs_decay = 100;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 4;
  model::McConfig mc;
  double lambda = model::kDefaultLambda;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // steps; 0 = only at the end
  int pretrain_epochs = 0;   // G1-only epochs when gen.pretrain_global is set

  int total_epochs() const { return epochs_constant + epochs_decay; }
  void validate() const;

  /// "paper" (lr0 = 0.05) or "safe" (lr0 = 2e-4); other fields default.
  static TrainConfig preset(std::string_view name);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Constant lr0 for epochs [0, epochs_constant), then linear decay reaching 0
/// at total_epochs(). Throws ConfigError outside [0, total_epochs()].
double lr_at(int epoch, const TrainConfig& config);

/// One training pair as tensors: one-hot label and image in [-1, 1].
struct Sample {
  std::string id;
  nn::Tensor<float> label;
  nn::Tensor<float> image;
};

Sample make_sample(const data::LabelMap& label, const data::RgbImage& image, std::string id);

/// Loads the entries of `split` ("train", "val" or "all") from a manifest.
std::vector<Sample> load_samples(const std::filesystem::path& manifest_file, std::string_view split);

struct TrainState {
  TrainConfig config;
  int epoch = 0;
  std::int64_t step = 0;
  model::GeneratorParams<float> gen;
  model::DiscriminatorParams<float> disc;
  nn::Adam<float> gen_opt;
  nn::Adam<float> disc_opt;
  Engine rng;

  /// Deep copy: parameters, moments and rng are duplicated.
  TrainState clone() const;
};

/// Fresh state with N(0, 0.02) weights. Weight-init and rollout randomness
/// come from split streams of config.seed.
TrainState init_train_state(const model::GeneratorConfig& gen, const model::DiscriminatorConfig& disc,
                            const TrainConfig& config);

struct StepResult {
  model::LossBreakdown losses;
  double lr = 0;
  std::size_t clamped = 0;  // log-argument clamps during the step
};

/// One discriminator update followed by one generator update on `batch`, at
/// the learning rate of state.epoch. Throws NumericError on non-finite losses
/// before any parameter is touched by the failing half-step.
StepResult train_step(TrainState& state, std::span<const Sample> batch);

/// Plain three-scale adversarial G term, as used when MC search is disabled.
/// Exposed for comparison against the rollout path.
double plain_adversarial_term(const TrainState& state, const Sample& sample);

/// Rollout G term for one sample with the state's rng left untouched.
double rollout_adversarial_term(const TrainState& state, const Sample& sample, std::uint64_t seed);

int steps_per_epoch(std::size_t samples, int batch_size);

/// Sample indices of global step `step`: per-epoch permutation keyed by
/// (seed, epoch), then consecutive batches.
std::vector<std::size_t> batch_indices(std::size_t samples, int batch_size, std::uint64_t seed, std::int64_t step);

struct RunOptions {
  std::int64_t max_steps = 0;  // 0 = run to the end of the schedule
  std::function<void(const TrainState&, const StepResult&)> on_step;
  std::function<void(const TrainState&)> on_epoch_end;
};

/// Drives train_step from state.step up to the stop condition.
void run_training(TrainState& state, const std::vector<Sample>& samples, const RunOptions& options);

/// Generator output as an image in [0, 1].
data::RgbImage infer_image(const model::GeneratorParams<float>& gen, const data::LabelMap& label);

}  // namespace mcgan::train
