#include <iostream>

#include "CLI11.hpp"
#include "mcgan/cli/commands.hpp"
#include "mcgan/core/error.hpp"

int main(int argc, char** argv) {
  using namespace mcgan::cli;
  CLI::App app{"mcgan: label-to-image synthesis for rail track scenes"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a procedural dataset of label/image pairs");
  s->add_option("--count", synth.count, "Number of base scenes")->required();
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--seed", synth.seed, "Root seed (default: MCGAN_SEED, then 0)");
  s->add_option("--size", synth.size, "Resolution HxW")->capture_default_str();
  s->add_option("--augment", synth.augment, "Augmented copies per scene")->capture_default_str();
  s->add_option("--split", synth.split, "Train fraction")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a generator/discriminator pair");
  t->add_option("--config", train.config, "Run config (key = value text or JSON)");
  t->add_option("--out", train.out, "Run directory")->required();
  t->add_option("--resume", train.resume, "Checkpoint to resume from");
  t->add_option("--preset", train.preset, "paper | safe");
  t->add_option("--set", train.overrides, "Override key=value (repeatable)");

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "Generate images from label maps");
  i->add_option("--checkpoint", infer.checkpoint, "Checkpoint file")->required();
  i->add_option("--labels", infer.labels, "Directory of label PNGs")->required();
  i->add_option("--out", infer.out, "Output directory")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score predicted masks against ground truth");
  e->add_option("--pred", eval.pred, "Directory of predicted mask PNGs")->required();
  e->add_option("--gt", eval.gt, "Directory of ground-truth label PNGs")->required();
  e->add_option("--out", eval.out, "Report file (JSON)")->required();
  e->add_option("--name", eval.name, "Method name for tables");
  e->add_option("--config", eval.config, "Run config for eval.* keys");
  e->add_option("--set", eval.overrides, "Override key=value (repeatable)");
  e->add_option("--timing", eval.timing, "timing.json written by infer");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Render comparison tables from report files");
  r->add_option("reports", report.reports, "report.json files")->required();
  r->add_option("--out", report.out, "Directory for table.txt and table.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::string msg = err.what();
    for (auto& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "error: kind=config msg=" << msg << '\n';
    return static_cast<int>(mcgan::ErrorKind::config);
  }

  try {
    if (*s) cmd_synth(synth, std::cerr);
    if (*t) cmd_train(train, std::cerr);
    if (*i) cmd_infer(infer, std::cerr);
    if (*e) cmd_eval(eval, std::cout);
    if (*r) cmd_report(report, std::cout);
  } catch (const std::exception& err) {
    std::cerr << error_line(err) << '\n';
    return exit_code_for(err);
  }
  return 0;
}
