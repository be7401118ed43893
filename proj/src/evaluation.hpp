#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "data_io.hpp"
#include "matrix.hpp"
#include "model.hpp"
#include "training.hpp"

namespace fsgn {

/// MPJPE-per-horizon row for one predictor.
struct EvalReport {
  std::string predictor;
  std::vector<int> horizons_ms;
  std::vector<double> mpjpe_mm;
  std::size_t n_samples = 0;
  std::uint64_t params_count = 0;
};

/// How MPJPE@h is aggregated: over all frames up to h (default) or over the
/// single frame at h.
enum class HorizonMode { cumulative, at_frame };

/// round(ms * fps / 1000)
int horizon_to_frames(int horizon_ms, int fps);

/// Maps an observed window to at least horizon_frames future frames.
using Predictor = std::function<Matrix(const Matrix& observed, int horizon_frames)>;

/// Runs the predictor once per sample to the largest horizon and reports the
/// error at every requested horizon, averaged across samples.
EvalReport evaluate(const std::string& name, const Predictor& predictor,
                    const std::vector<WindowSample>& samples, int fps,
                    const std::vector<int>& horizons_ms,
                    HorizonMode mode = HorizonMode::cumulative,
                    std::uint64_t params_count = 0);

/// Ranking: ascending MPJPE at the largest horizon, ties broken by parameter
/// count ascending. All reports must share the same horizon list.
std::vector<EvalReport> compare(std::vector<EvalReport> reports);

/// Aligned text table, one row per predictor.
std::string render_table(const std::vector<EvalReport>& reports);

/// Long-format CSV: predictor,params,h_ms,mpjpe_mm
void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports);

// ---------------------------------------------------------------------------
// Ablation grids

enum class AblationAxis { t_in_t_out, n_s_n_t, alpha, components, lambda, displacement };

AblationAxis parse_ablation_axis(const std::string& name);  // throws listing valid axes
std::string ablation_axis_name(AblationAxis axis);
std::vector<std::string> ablation_axis_names();

/// One grid entry: a labelled model-config variant.
struct GridPoint {
  std::string label;
  ModelConfig config;
};

/// Builds the labelled config variants for one axis; every axis has a
/// built-in default grid, and a raw grid (from config) overrides it. Raw
/// entries are axis-dependent: [t_in, t_out]
/// pairs, [n_s, n_t] pairs, [alpha_v, alpha_a] pairs, lambda values, or
/// component/displacement variant names. Throws on any invalid point before
/// anything is trained.
std::vector<GridPoint> build_ablation_grid(AblationAxis axis, const ModelConfig& base,
                                           const std::vector<std::vector<double>>& numeric_grid,
                                           const std::vector<std::string>& name_grid);

struct AblationJob {
  AblationAxis axis;
  std::vector<GridPoint> grid;
  TrainConfig train_cfg;
  std::vector<SkeletonSequence> train_seqs;
  std::vector<SkeletonSequence> test_seqs;
  int stride = 1;
  int fps = 25;
  std::vector<int> horizons_ms;
  HorizonMode mode = HorizonMode::cumulative;
  std::size_t sample_cap = 0;  // per-label cap on eval windows; 0 = use all
  std::uint64_t eval_seed = 7;
};

/// Trains one model per grid point (shared seed, identical data order) and
/// evaluates each on the test windows.
std::vector<EvalReport> run_ablation(const AblationJob& job);

/// Seeded per-label subsampling of evaluation windows; keeps at most cap
/// windows per activity label (all of them when cap is 0).
std::vector<WindowSample> cap_samples(std::vector<WindowSample> samples, std::size_t cap,
                                      std::uint64_t seed);

/// Windows with t_obs = cfg.t_in and future long enough for the largest
/// horizon, pooled over sequences.
std::vector<WindowSample> eval_windows(const std::vector<SkeletonSequence>& seqs,
                                       const ModelConfig& cfg, int fps,
                                       const std::vector<int>& horizons_ms, int stride);

/// Predictor wrapping forward() in a rollout to arbitrary horizons.
Predictor model_predictor(const FsgnParams& params, const ModelConfig& cfg);

}  // namespace fsgn
