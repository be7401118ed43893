#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data_io.hpp"
#include "matrix.hpp"
#include "model.hpp"

namespace fsgn {

/// Frame-by-frame difference along time: row t = X[t] - X[t-1], first row
/// zero. Applied once it yields velocity, twice acceleration.
Matrix frame_diff(const Matrix& x);

/// Mean per-joint position error in the units of the input (millimeters
/// throughout this project): mean over joints and frames of the Euclidean
/// distance between corresponding 3-vectors.
double mpjpe(const Matrix& y, const Matrix& x, int joints);

struct LossParts {
  double total = 0.0;
  double p = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// L_p + alpha_v * L_v + alpha_a * L_a over absolute reconstructed sequences.
LossParts loss_fsgn(const Matrix& pred_abs, const Matrix& target_abs, const ModelConfig& cfg);

/// Exact reverse-mode gradient of loss_fsgn(forward(...)) with respect to
/// every parameter entry. Throws NumericError when the loss is non-finite.
struct BackwardResult {
  LossParts loss;
  Gradients grad;
};
BackwardResult backward(const FsgnParams& p, const ModelConfig& cfg, const Matrix& x_obs,
                        const Matrix& target_abs);

/// Same, accumulating into an existing gradient tree (used by the batch loop).
LossParts backward_accumulate(const FsgnParams& p, const ModelConfig& cfg,
                              const Matrix& x_obs, const Matrix& target_abs,
                              Gradients& grad_acc);

struct OptimizerState {
  Gradients m;
  Gradients v;
  long step = 0;
};

OptimizerState make_optimizer_state(const ModelConfig& cfg);

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias correction.
void adam_step(FsgnParams& params, const Gradients& grad, OptimizerState& state, double lr);

struct TrainConfig {
  int epochs = 80;
  int batch_size = 256;
  double learning_rate = 3e-4;
  double lr_decay = 1.0;     // learning rate multiplier applied every lr_decay_every epochs
  int lr_decay_every = 1;
  std::uint64_t seed = 1;
  double grad_clip = 0.0;    // global max-norm; 0 disables clipping

  void validate() const;
};

struct LossCurvePoint {
  long step = 0;  // optimizer step index, 1-based
  int epoch = 0;  // 1-based
  LossParts loss;
};

struct TrainResult {
  FsgnParams params;
  std::vector<LossCurvePoint> curve;
};

/// Seeded shuffling per epoch, mean loss/gradient per batch, Adam updates.
/// Batch gradients are reduced in a fixed chunk order so the result is
/// bit-identical for any worker count (see set_worker_count).
TrainResult train(const std::vector<WindowSample>& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

/// CSV: step,epoch,loss_total,loss_p,loss_v,loss_a
void write_loss_curve_csv(const std::string& path, const std::vector<LossCurvePoint>& curve);

/// Worker threads used for batch gradient evaluation. 0 restores the
/// hardware default. Any value yields identical numerical results.
void set_worker_count(int n);
int worker_count();

}  // namespace fsgn
