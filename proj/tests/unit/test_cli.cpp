#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "mcgan/cli/commands.hpp"
#include "mcgan/cli/run_config.hpp"
#include "mcgan/core/error.hpp"

using namespace mcgan;
using namespace mcgan::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mcgan_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI, returning its exit status; stderr goes to `err`.
int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(MCGAN_BIN) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run config text grammar") {
  RunConfig c;
  c.merge_text("# comment\n\ntrain.lr = 0.01   # trailing\n  mc.n=3\ngen.pretrain_global = true\n");
  CHECK(c.get("train.lr") == "0.01");
  CHECK(c.get_int("mc.n") == 3);
  CHECK(c.get_bool("gen.pretrain_global"));
  CHECK(c.is_default("train.batch_size"));
  CHECK_THROWS_AS(c.merge_text("train.nope = 1\n"), ConfigError);
  CHECK_THROWS_AS(c.merge_text("train.lr 0.1\n"), ConfigError);
  CHECK_THROWS_AS(c.merge_text("mc.n = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(c.merge_text("mc.n = 2\nmc.n = 3\n"), ConfigError);
  CHECK_THROWS_AS(c.merge_text("Train.LR = 1\n"), ConfigError);
  CHECK_THROWS_AS(c.set("mc.enabled", "maybe"), ConfigError);
}

TEST_CASE("JSON configs are equivalent to text configs") {
  RunConfig text, flat, nested;
  text.merge_text("train.lr = 0.01\nmc.n = 3\nmc.enabled = false\ndata.manifest = a/b.json\n");
  flat.merge_text(R"({"train.lr": 0.01, "mc.n": 3, "mc.enabled": false, "data.manifest": "a/b.json"})");
  nested.merge_text(R"({"train": {"lr": 0.01}, "mc": {"n": 3, "enabled": false}, "data": {"manifest": "a/b.json"}})");
  CHECK(text.to_text() == flat.to_text());
  CHECK(text.to_text() == nested.to_text());
  CHECK_THROWS_AS(flat.merge_text(R"({"train": {"lr": [1]}})"), ConfigError);
}

TEST_CASE("layering: defaults, file, preset, overrides") {
  const auto dir = fresh_dir("layers");
  write(dir / "run.txt", "train.lr = 0.003\ntrain.batch_size = 2\nmc.n = 7\n");
  auto c = layered_config(dir / "run.txt", "safe", {"mc.n=9", "train.seed=4"});
  CHECK(c.get_double("train.lr") == 2e-4);
  CHECK(c.get("train.preset") == "safe");
  CHECK(c.get_int("train.batch_size") == 2);
  CHECK(c.get_int("mc.n") == 9);
  CHECK(c.training().seed == 4);
  CHECK(c.training().mc.n == 9);

  RunConfig again;
  again.merge_text(c.to_text());
  CHECK(again.to_text() == c.to_text());

  ::setenv("MCGAN_SEED", "31", 1);
  CHECK(layered_config({}, "", {}).get("train.seed") == "31");
  ::unsetenv("MCGAN_SEED");
  CHECK(layered_config({}, "", {}).get("train.seed") == "0");
  CHECK_THROWS_AS(layered_config(dir / "missing.txt", "", {}), IoError);
  CHECK_THROWS_AS(layered_config({}, "turbo", {}), ConfigError);
  CHECK(RunConfig::known_keys().size() == RunConfig().entries().size());
}

TEST_CASE("synth twice gives identical directories") {
  const auto dir = fresh_dir("synth");
  std::ostringstream log;
  SynthArgs a;
  a.count = 4;
  a.seed = "1";
  a.size = "32x64";
  a.out = dir / "a";
  cmd_synth(a, log);
  a.out = dir / "b";
  cmd_synth(a, log);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a"))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir / "a"));
  CHECK(files.size() == 10);
  for (const auto& f : files) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  a.size = "64";
  CHECK_THROWS_AS(cmd_synth(a, log), ConfigError);
}

TEST_CASE("train, resume, infer, eval and report end to end") {
  const auto dir = fresh_dir("e2e");
  std::ostringstream log;
  SynthArgs s;
  s.count = 3;
  s.seed = "2";
  s.size = "16x32";
  s.out = dir / "ds";
  cmd_synth(s, log);
  write(dir / "run.txt",
        "data.manifest = " + (dir / "ds" / "manifest.json").string() +
            "\ndata.split = all\ngen.width = 32\ngen.height = 16\ngen.fusion_channels = 4\ngen.local_channels = 2\n"
            "gen.global_blocks = 1\ngen.local_blocks = 1\ndisc.stem_channels = 4\ndisc.channels = 4\n"
            "train.batch_size = 2\nmc.n = 2\ntrain.seed = 3\ntrain.max_steps = 4\ntrain.checkpoint_every = 2\n");
  TrainArgs t;
  t.config = dir / "run.txt";
  t.out = dir / "run";
  t.preset = "safe";
  cmd_train(t, log);
  CHECK(fs::exists(dir / "run" / "checkpoints" / "final.ckpt"));
  CHECK(fs::exists(dir / "run" / "checkpoints" / "step_00000002.ckpt"));
  CHECK(fs::exists(dir / "run" / "run_config.txt"));
  std::ifstream jl(dir / "run" / "train_log.jsonl");
  int lines = 0;
  for (std::string l; std::getline(jl, l);) ++lines;
  CHECK(lines == 4);

  // The resolved config reproduces the run.
  TrainArgs replay;
  replay.config = dir / "run" / "run_config.txt";
  replay.out = dir / "replay";
  cmd_train(replay, log);
  CHECK(slurp(dir / "replay" / "checkpoints" / "final.ckpt") == slurp(dir / "run" / "checkpoints" / "final.ckpt"));

  // Resuming with a different config is refused.
  TrainArgs bad = replay;
  bad.out = dir / "bad";
  bad.resume = dir / "run" / "checkpoints" / "step_00000002.ckpt";
  bad.overrides = {"mc.n=3"};
  CHECK_THROWS_AS(cmd_train(bad, log), ConfigError);

  InferArgs i;
  i.checkpoint = dir / "run" / "checkpoints" / "final.ckpt";
  i.labels = dir / "ds" / "labels";
  i.out = dir / "inf";
  cmd_infer(i, log);
  CHECK(fs::exists(dir / "inf" / "timing.json"));

  EvalArgs e;
  e.pred = dir / "inf" / "masks";
  e.gt = dir / "ds" / "labels";
  e.out = dir / "eval" / "report.json";
  e.name = "tiny";
  e.timing = dir / "inf" / "timing.json";
  cmd_eval(e, log);
  CHECK(fs::exists(e.out));

  ReportArgs r;
  r.reports = {e.out};
  r.out = dir / "tables";
  std::ostringstream table;
  cmd_report(r, table);
  CHECK(table.str().find("tiny | ") != std::string::npos);
  CHECK(fs::exists(dir / "tables" / "table.csv"));

  // Mismatched counts: input error and no report written.
  fs::remove(dir / "inf" / "masks" / "scene_000000.png");
  e.out = dir / "eval2" / "report.json";
  CHECK_THROWS_AS(cmd_eval(e, log), InputError);
  CHECK_FALSE(fs::exists(e.out));
}

TEST_CASE("exit codes and single-line errors") {
  const auto dir = fresh_dir("exit");
  const auto err = dir / "err.txt";
  CHECK(run_cli("report " + (dir / "missing.json").string(), err) == 3);
  CHECK(slurp(err).rfind("error: kind=io msg=", 0) == 0);
  write(dir / "bad.txt", "train.bogus = 1\n");
  CHECK(run_cli("train --config " + (dir / "bad.txt").string() + " --out " + (dir / "o").string(), err) == 2);
  CHECK(slurp(err).find("kind=config") != std::string::npos);
  write(dir / "junk.ckpt", "MCGANCKP");
  fs::create_directories(dir / "labels");
  CHECK(run_cli("infer --checkpoint " + (dir / "junk.ckpt").string() + " --labels " + (dir / "labels").string() +
                    " --out " + (dir / "inf").string(),
                err) == 4);
  fs::create_directories(dir / "p");
  fs::create_directories(dir / "g");
  write(dir / "g" / "x.png", "");
  CHECK(run_cli("eval --pred " + (dir / "p").string() + " --gt " + (dir / "g").string() + " --out " +
                    (dir / "r.json").string(),
                err) == 5);
  CHECK_FALSE(fs::exists(dir / "r.json"));
  CHECK(run_cli("nonsense", err) == 2);
  const auto text = slurp(err);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  write(dir / "a.json", R"({"name": "paper", "acc": 0.9501, "fp": 0.0401, "fn": 0.0186})");
  CHECK(run_cli("report " + (dir / "a.json").string(), err) == 0);
}
