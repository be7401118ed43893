#include "runner.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "errors.hpp"
#include "evaluation.hpp"
#include "model.hpp"
#include "training.hpp"

namespace fs = std::filesystem;

namespace fsgn {

namespace {

bool wildcard_match(const std::string& pattern, const std::string& text) {
  std::size_t p = 0, t = 0, star = std::string::npos, match = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == text[t])) {
      ++p, ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      match = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++match;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

SkeletonSequence select_joints(SkeletonSequence seq, const std::vector<int>& joint_indices) {
  if (joint_indices.empty()) return seq;
  for (int idx : joint_indices) {
    if (idx >= seq.joints) {
      throw DataError("joint index " + std::to_string(idx) + " out of range for sequence '" +
                      seq.label + "' with " + std::to_string(seq.joints) + " joints");
    }
  }
  Matrix selected(seq.frames.rows(), joint_indices.size() * 3);
  for (std::size_t r = 0; r < seq.frames.rows(); ++r) {
    for (std::size_t j = 0; j < joint_indices.size(); ++j) {
      for (std::size_t d = 0; d < 3; ++d) {
        selected(r, 3 * j + d) = seq.frames(r, 3 * static_cast<std::size_t>(joint_indices[j]) + d);
      }
    }
  }
  seq.frames = std::move(selected);
  seq.joints = static_cast<int>(joint_indices.size());
  return seq;
}

std::vector<SkeletonSequence> load_files(const std::vector<std::string>& patterns,
                                         const DataConfig& data) {
  std::vector<SkeletonSequence> seqs;
  const std::set<std::string> blacklist(data.label_blacklist.begin(),
                                        data.label_blacklist.end());
  for (const std::string& pattern : patterns) {
    const auto files = expand_glob(pattern);
    if (files.empty()) throw DataError("no files match '" + pattern + "'");
    for (const std::string& file : files) {
      SkeletonSequence seq = load_sequence(file);
      if (blacklist.contains(seq.label)) continue;
      if (seq.fps != data.fps) {
        throw DataError(file + ": fps " + std::to_string(seq.fps) +
                        " does not match configured data.fps " + std::to_string(data.fps));
      }
      seqs.push_back(select_joints(std::move(seq), data.joint_indices));
    }
  }
  return seqs;
}

void expect_channels(const std::vector<SkeletonSequence>& seqs, int k, const char* role) {
  for (const SkeletonSequence& seq : seqs) {
    if (seq.joints * 3 != k) {
      throw DataError(std::string(role) + " sequence '" + seq.label + "' has " +
                      std::to_string(seq.joints * 3) + " channels, model.k is " +
                      std::to_string(k));
    }
  }
}

std::vector<WindowSample> training_windows(const std::vector<SkeletonSequence>& seqs,
                                           const ModelConfig& model, int stride) {
  std::vector<WindowSample> windows;
  for (const SkeletonSequence& seq : seqs) {
    auto w = make_windows(seq, model.t_in, model.t_out, stride);
    windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                   std::make_move_iterator(w.end()));
  }
  if (windows.empty()) {
    throw DataError("no training windows: sequences are shorter than t_in + t_out = " +
                    std::to_string(model.t_in + model.t_out) + " frames");
  }
  return windows;
}

}  // namespace

std::vector<std::string> expand_glob(const std::string& pattern) {
  if (pattern.find('*') == std::string::npos) {
    return fs::exists(pattern) ? std::vector<std::string>{pattern} : std::vector<std::string>{};
  }

  const fs::path full(pattern);
  const fs::path dir = full.parent_path().empty() ? fs::path(".") : full.parent_path();
  if (dir.string().find('*') != std::string::npos) {
    throw DataError("glob wildcards are only supported in the file name: " + pattern);
  }
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (wildcard_match(full.filename().string(), entry.path().filename().string())) {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Corpus load_corpus(const RunConfig& cfg) {
  Corpus corpus;
  if (cfg.data.synth) {
    const SynthCorpusConfig& synth = *cfg.data.synth;
    for (int i = 0; i < synth.train_count; ++i) {
      corpus.train.push_back(synth_motion(synth.spec, synth.seed + static_cast<std::uint64_t>(i)));
      corpus.train.back().label = "synth_train_" + std::to_string(i);
    }
    for (int j = 0; j < synth.test_count; ++j) {
      corpus.test.push_back(
          synth_motion(synth.spec, synth.seed + 1000000 + static_cast<std::uint64_t>(j)));
      corpus.test.back().label = "synth_test_" + std::to_string(j);
    }
    return corpus;
  }
  if (cfg.data.train_paths.empty() && cfg.data.test_paths.empty()) {
    throw ConfigError("data: either synth or train_paths/test_paths must be given");
  }
  corpus.train = load_files(cfg.data.train_paths, cfg.data);
  corpus.test = load_files(cfg.data.test_paths, cfg.data);
  return corpus;
}

void run_train(const RunConfig& cfg, const std::string& out_dir) {
  const Corpus corpus = load_corpus(cfg);
  if (corpus.train.empty()) throw DataError("train: no training sequences");
  expect_channels(corpus.train, cfg.model.k, "training");

  const auto windows = training_windows(corpus.train, cfg.model, cfg.data.stride);
  const TrainResult result = train(windows, cfg.model, cfg.train);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  save_checkpoint({cfg.model, cfg.train.seed, cfg.train.epochs, result.params},
                  (dir / "model.json").string(), (dir / "model.bin").string());
  write_loss_curve_csv((dir / "loss_curve.csv").string(), result.curve);
}

std::string run_eval(const RunConfig& cfg, const std::string& checkpoint_json,
                     const std::string& csv_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_json);
  const Corpus corpus = load_corpus(cfg);
  if (corpus.test.empty()) throw DataError("eval: no test sequences");
  expect_channels(corpus.test, ckpt.config.k, "test");

  auto samples = cap_samples(
      eval_windows(corpus.test, ckpt.config, cfg.data.fps, cfg.eval.horizons_ms,
                   cfg.data.stride),
      cfg.eval.sample_cap, cfg.eval.seed);
  if (samples.empty()) {
    throw DataError("eval: no evaluation windows (sequences too short for t_in plus the "
                    "largest horizon)");
  }

  std::vector<EvalReport> reports;
  reports.push_back(evaluate("fsgn", model_predictor(ckpt.params, ckpt.config), samples,
                             cfg.data.fps, cfg.eval.horizons_ms, cfg.eval.mode,
                             param_count(ckpt.config)));
  reports.push_back(evaluate(
      "zero_velocity",
      [](const Matrix& obs, int h) { return baseline_zero_velocity(obs, h); }, samples,
      cfg.data.fps, cfg.eval.horizons_ms, cfg.eval.mode));
  reports.push_back(evaluate(
      "constant_velocity",
      [](const Matrix& obs, int h) { return baseline_constant_velocity(obs, h); }, samples,
      cfg.data.fps, cfg.eval.horizons_ms, cfg.eval.mode));

  reports = compare(std::move(reports));
  if (!csv_path.empty()) write_reports_csv(csv_path, reports);
  return render_table(reports);
}

std::string run_ablate(const RunConfig& cfg, const std::string& axis_name,
                       const std::string& csv_path) {
  std::string axis_str = axis_name;
  if (axis_str.empty() && cfg.ablate) axis_str = cfg.ablate->axis;
  if (axis_str.empty()) {
    throw ConfigError("ablate: no axis given (pass --axis or set ablate.axis)");
  }
  const AblationAxis axis = parse_ablation_axis(axis_str);

  std::vector<std::vector<double>> numeric_grid;
  std::vector<std::string> name_grid;
  if (cfg.ablate && cfg.ablate->axis == axis_str) {
    numeric_grid = cfg.ablate->numeric_grid;
    name_grid = cfg.ablate->name_grid;
  }

  AblationJob job;
  job.axis = axis;
  job.grid = build_ablation_grid(axis, cfg.model, numeric_grid, name_grid);
  job.train_cfg = cfg.train;
  Corpus corpus = load_corpus(cfg);
  expect_channels(corpus.train, cfg.model.k, "training");
  expect_channels(corpus.test, cfg.model.k, "test");
  job.train_seqs = std::move(corpus.train);
  job.test_seqs = std::move(corpus.test);
  job.stride = cfg.data.stride;
  job.fps = cfg.data.fps;
  job.horizons_ms = cfg.eval.horizons_ms;
  job.mode = cfg.eval.mode;
  job.sample_cap = cfg.eval.sample_cap;
  job.eval_seed = cfg.eval.seed;

  const std::vector<EvalReport> reports = run_ablation(job);
  if (!csv_path.empty()) write_reports_csv(csv_path, reports);
  return render_table(reports);
}

void run_synth(const RunConfig& cfg, const std::string& out_dir) {
  if (!cfg.data.synth) throw ConfigError("synth: config has no data.synth section");
  const Corpus corpus = load_corpus(cfg);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  for (const SkeletonSequence& seq : corpus.train) {
    save_sequence(seq, (dir / (seq.label + ".txt")).string());
  }
  for (const SkeletonSequence& seq : corpus.test) {
    save_sequence(seq, (dir / (seq.label + ".txt")).string());
  }
}

}  // namespace fsgn
