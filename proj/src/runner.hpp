#pragma once

#include <string>
#include <vector>

#include "data_io.hpp"
#include "run_config.hpp"

namespace fsgn {

/// The sequences a run config points at: either the seeded synthetic corpus
/// or files matched by the train/test path globs, with joint selection and
/// label blacklist applied.
struct Corpus {
  std::vector<SkeletonSequence> train;
  std::vector<SkeletonSequence> test;
};

Corpus load_corpus(const RunConfig& cfg);

/// Expands a path or glob ('*' wildcards within path components) into a
/// sorted file list.
std::vector<std::string> expand_glob(const std::string& pattern);

/// Trains per the config and writes <out_dir>/model.json, model.bin and
/// loss_curve.csv.
void run_train(const RunConfig& cfg, const std::string& out_dir);

/// Evaluates the checkpoint plus the zero-velocity and constant-velocity
/// baselines on the test corpus; writes the long-format CSV and returns the
/// rendered comparison table.
std::string run_eval(const RunConfig& cfg, const std::string& checkpoint_json,
                     const std::string& csv_path);

/// Trains and evaluates one model per grid point of the requested axis
/// (axis_name may be empty when the config's ablate.axis is set); writes the
/// multi-report CSV and returns the rendered table.
std::string run_ablate(const RunConfig& cfg, const std::string& axis_name,
                       const std::string& csv_path);

/// Writes the configured synthetic corpus as sequence files under out_dir.
void run_synth(const RunConfig& cfg, const std::string& out_dir);

}  // namespace fsgn
