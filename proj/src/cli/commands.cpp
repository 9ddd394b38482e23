#include "mcgan/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "mcgan/cli/run_config.hpp"
#include "mcgan/core/error.hpp"
#include "mcgan/core/rng.hpp"
#include "mcgan/data/manifest.hpp"
#include "mcgan/data/png_io.hpp"
#include "mcgan/metrics/metrics.hpp"
#include "mcgan/train/checkpoint.hpp"

namespace fs = std::filesystem;

namespace mcgan::cli {

namespace {

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("write failed for " + file.string());
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::vector<fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->exit_code();
  return static_cast<int>(ErrorKind::internal);
}

std::string error_line(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  std::string msg = e.what();
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  std::replace(msg.begin(), msg.end(), '\r', ' ');
  return std::string("error: kind=") + (err ? std::string(error_kind_name(err->kind())) : std::string("internal")) + " msg=" + msg;
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    std::size_t a = 0;
    std::size_t b = 0;
    const int h = std::stoi(text.substr(0, x), &a);
    const int w = std::stoi(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1) throw std::invalid_argument("trailing");
    return {h, w};
  } catch (const std::logic_error&) {
    throw ConfigError("size must be HxW, got '" + text + "'");
  }
}

void cmd_synth(const SynthArgs& args, std::ostream& log) {
  if (args.count < 1) throw ConfigError("--count must be >= 1");
  if (args.augment < 0) throw ConfigError("--augment must be >= 0");
  const auto [h, w] = parse_size(args.size);
  data::SynthOptions opt;
  opt.count = args.count;
  opt.height = h;
  opt.width = w;
  opt.seed = resolve_root_seed(args.seed, 0);
  opt.augment_copies = args.augment;
  opt.split_ratio = args.split;
  ensure_dir(args.out);
  const auto manifest = data::synthesize_dataset(opt, args.out);
  nlohmann::json cfg = {{"data.count", opt.count},          {"data.height", opt.height},
                        {"data.width", opt.width},          {"data.seed", opt.seed},
                        {"data.augment", opt.augment_copies}, {"data.split_ratio", opt.split_ratio}};
  std::ostringstream os;
  for (const auto& [k, v] : cfg.items()) os << k << " = " << v.dump() << '\n';
  write_text(args.out / "run_config.txt", os.str());
  log << "synth: wrote " << manifest.entries.size() << " pairs to " << args.out.string() << '\n';
}

void cmd_train(const TrainArgs& args, std::ostream& log) {
  const RunConfig cfg = layered_config(args.config, args.preset, args.overrides);
  const auto gen_cfg = cfg.generator();
  const auto disc_cfg = cfg.discriminator();
  const auto train_cfg = cfg.training();
  if (cfg.get("data.manifest").empty()) throw ConfigError("data.manifest is not set");
  if (train_cfg.lr0 >= 0.01)
    log << "warning: train.lr=" << cfg.get("train.lr")
        << " is far above the usual 2e-4 for Adam GAN training; use --preset safe for stable runs\n";

  const auto samples = train::load_samples(cfg.get("data.manifest"), cfg.get("data.split"));
  if (samples.empty()) throw InputError("no samples in split '" + cfg.get("data.split") + "'");

  train::TrainState state = args.resume.empty() ? train::init_train_state(gen_cfg, disc_cfg, train_cfg)
                                                : train::load_checkpoint(args.resume);
  if (!args.resume.empty()) {
    if (!(state.gen.config == gen_cfg) || !(state.disc.config == disc_cfg) || !(state.config == train_cfg))
      throw ConfigError("resolved config differs from the checkpoint's config; resume with the run's run_config.txt");
  }

  ensure_dir(args.out);
  const fs::path ckpt_dir = args.out / "checkpoints";
  ensure_dir(ckpt_dir);
  write_text(args.out / "run_config.txt", cfg.to_text());

  const auto mode = args.resume.empty() ? std::ios::trunc : std::ios::app;
  std::ofstream jsonl(args.out / "train_log.jsonl", std::ios::binary | std::ios::out | mode);
  const fs::path csv_path = args.out / "metrics.csv";
  const bool write_header = args.resume.empty() || !fs::exists(csv_path);
  std::ofstream csv(csv_path, std::ios::binary | std::ios::out | mode);
  if (!jsonl || !csv) throw IoError("cannot open training logs in " + args.out.string());
  if (write_header) csv << "epoch,end_step,steps,lr,d_loss,q,fm_sum,total_g,clamped\n";

  // Means over the steps of each epoch seen by this invocation.
  struct EpochSums {
    long steps = 0, clamped = 0;
    double lr = 0, d = 0, q = 0, fm = 0, g = 0;
  } sums;

  train::RunOptions run;
  run.max_steps = cfg.get_int("train.max_steps");
  run.on_step = [&](const train::TrainState& s, const train::StepResult& r) {
    const auto& l = r.losses;
    jsonl << l.to_json_line(static_cast<long>(s.step)) << '\n';
    ++sums.steps;
    sums.clamped += r.clamped;
    sums.lr = r.lr;
    sums.d += l.total_d;
    sums.q += l.q;
    sums.fm += l.fm[0] + l.fm[1] + l.fm[2];
    sums.g += l.total_g;
    if (train_cfg.checkpoint_every > 0 && s.step % train_cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "step_%08lld.ckpt", static_cast<long long>(s.step));
      train::save_checkpoint(s, ckpt_dir / name);
    }
  };
  run.on_epoch_end = [&](const train::TrainState& s) {
    if (sums.steps == 0) return;
    const double n = static_cast<double>(sums.steps);
    csv << s.epoch << ',' << s.step << ',' << sums.steps << ',' << csv_number(sums.lr) << ',' << csv_number(sums.d / n)
        << ',' << csv_number(sums.q / n) << ',' << csv_number(sums.fm / n) << ',' << csv_number(sums.g / n) << ','
        << sums.clamped << '\n';
    csv.flush();
    jsonl.flush();
    sums = EpochSums{};
  };
  train::run_training(state, samples, run);
  jsonl.flush();
  csv.flush();
  train::save_checkpoint(state, ckpt_dir / "final.ckpt");
  log << "train: " << state.step << " steps, epoch " << state.epoch << ", checkpoint "
      << (ckpt_dir / "final.ckpt").string() << '\n';
}

void cmd_infer(const InferArgs& args, std::ostream& log) {
  const auto state = train::load_checkpoint(args.checkpoint);
  const auto inputs = png_files(args.labels);
  if (inputs.empty()) throw InputError("no label PNGs in " + args.labels.string());
  ensure_dir(args.out / "images");
  ensure_dir(args.out / "masks");
  double seconds = 0;
  for (const auto& file : inputs) {
    const auto label = data::read_label_png(file);
    const auto t0 = std::chrono::steady_clock::now();
    const auto image = train::infer_image(state.gen, label);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    data::write_image_png(image, args.out / "images" / file.filename());
    data::write_label_png(data::classify_pixels(image), args.out / "masks" / file.filename());
  }
  const nlohmann::json timing = {{"images", inputs.size()}, {"avg_time_s", seconds / static_cast<double>(inputs.size())}};
  write_text(args.out / "timing.json", timing.dump(2) + "\n");
  log << "infer: " << inputs.size() << " images to " << args.out.string() << '\n';
}

void cmd_eval(const EvalArgs& args, std::ostream& log) {
  RunConfig cfg = layered_config(args.config, "", args.overrides);
  const auto eval_cfg = cfg.evaluation();
  if (args.out.empty()) throw ConfigError("--out is required");
  const auto preds = png_files(args.pred);
  const auto gts = png_files(args.gt);
  if (preds.size() != gts.size())
    throw InputError("prediction count " + std::to_string(preds.size()) + " != ground-truth count " +
                     std::to_string(gts.size()));
  std::vector<std::pair<std::string, std::pair<data::LabelMap, data::LabelMap>>> pairs;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].filename() != gts[i].filename())
      throw InputError("unpaired files: " + preds[i].filename().string() + " vs " + gts[i].filename().string());
    pairs.push_back({preds[i].filename().string(), {data::read_label_png(preds[i]), data::read_label_png(gts[i])}});
  }
  auto report = metrics::evaluate(pairs, eval_cfg);
  report.name = args.name.empty() ? args.pred.filename().string() : args.name;
  if (!args.timing.empty()) {
    try {
      report.avg_time_s = nlohmann::json::parse(read_text(args.timing)).at("avg_time_s").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed timing file " + args.timing.string() + ": " + e.what());
    }
  }
  const auto parent = args.out.parent_path();
  if (!parent.empty()) ensure_dir(parent);
  const fs::path tmp = args.out.string() + ".tmp";
  write_text(tmp, report.to_json().dump(2) + "\n");
  fs::rename(tmp, args.out);
  log << metrics::render_track_table({report}) << metrics::render_pixel_table({report});
  if (report.fp_undefined) log << "note: no predicted lanes; FP reported as 0\n";
}

void cmd_report(const ReportArgs& args, std::ostream& log) {
  if (args.reports.empty()) throw ConfigError("report needs at least one report.json");
  std::vector<metrics::MetricsReport> reports;
  for (const auto& file : args.reports) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(file));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed report " + file.string() + ": " + e.what());
    }
    auto r = metrics::MetricsReport::from_json(j);
    if (r.name.empty()) r.name = file.stem().string();
    reports.push_back(std::move(r));
  }
  const std::string table = metrics::render_track_table(reports) + "\n" + metrics::render_pixel_table(reports);
  log << table;
  if (!args.out.empty()) {
    ensure_dir(args.out);
    write_text(args.out / "table.txt", table);
    write_text(args.out / "table.csv", metrics::render_csv(reports));
  }
}

}  // namespace mcgan::cli
