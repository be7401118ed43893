#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "data_io.hpp"
#include "evaluation.hpp"
#include "model.hpp"
#include "training.hpp"

namespace fsgn {

/// Seeded in-memory corpus used instead of files when data.synth is present.
struct SynthCorpusConfig {
  SynthSpec spec;
  int train_count = 16;
  int test_count = 4;
  std::uint64_t seed = 42;
};

struct DataConfig {
  std::vector<std::string> train_paths;  // files or globs ('*' within a name)
  std::vector<std::string> test_paths;
  std::vector<int> joint_indices;  // evaluated-joint subset; empty = all
  int fps = 25;
  int stride = 1;
  std::vector<std::string> label_blacklist;
  std::optional<SynthCorpusConfig> synth;
};

struct EvalSettings {
  std::vector<int> horizons_ms{80, 160, 320, 400, 560, 720, 880, 1000};
  std::size_t sample_cap = 256;  // per activity label; 0 = all windows
  std::uint64_t seed = 7;
  HorizonMode mode = HorizonMode::cumulative;
};

struct AblateSettings {
  std::string axis;
  std::vector<std::vector<double>> numeric_grid;
  std::vector<std::string> name_grid;
};

/// One JSON document describing a whole experiment. Unknown keys are
/// rejected everywhere. Absent keys take the documented defaults.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  EvalSettings eval;
  std::optional<AblateSettings> ablate;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace fsgn
