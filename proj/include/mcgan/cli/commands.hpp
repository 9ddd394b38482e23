#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mcgan::cli {

/// Process exit codes. Values match ErrorKind.
///   0 success, 1 internal, 2 config, 3 io, 4 load (checkpoint),
///   5 input (mismatched inputs), 6 numeric, 7 shape
int exit_code_for(const std::exception& e);

/// "error: kind=<kind> msg=<message>" on one line.
std::string error_line(const std::exception& e);

struct SynthArgs {
  int count = 16;
  std::filesystem::path out;
  std::string seed;  // empty: MCGAN_SEED, then 0
  std::string size = "128x256";  // HxW
  int augment = 0;
  double split = 0.8;
};

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path out;
  std::filesystem::path resume;
  std::string preset;
  std::vector<std::string> overrides;  // key=value
};

struct InferArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path labels;
  std::filesystem::path out;
};

struct EvalArgs {
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::filesystem::path out;  // report.json
  std::string name;
  std::filesystem::path config;
  std::vector<std::string> overrides;
  std::filesystem::path timing;  // optional timing.json from infer
};

struct ReportArgs {
  std::vector<std::filesystem::path> reports;
  std::filesystem::path out;  // optional directory for table.txt / table.csv
};

void cmd_synth(const SynthArgs& args, std::ostream& log);
void cmd_train(const TrainArgs& args, std::ostream& log);
void cmd_infer(const InferArgs& args, std::ostream& log);
void cmd_eval(const EvalArgs& args, std::ostream& log);
void cmd_report(const ReportArgs& args, std::ostream& log);

/// Parses "HxW" (e.g. "64x128").
std::pair<int, int> parse_size(const std::string& text);

}  // namespace mcgan::cli
