#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "sequence_control.hpp"

namespace fsgn {

/// What the smallest encoder/decoder unit computes.
///   ln_residual — LN(FC(x)) + x, the improved-MLP unit (default)
///   fc_residual — FC(x) + x, the no-layer-norm ablation
///   relu        — max(0, FC(x)), a traditional MLP unit (no residual)
enum class BlockStyle { ln_residual, fc_residual, relu };

/// Whether the decoder output is read as per-frame displacement relative to
/// the last observed frame (default) or as absolute joint coordinates.
enum class OutputMode { displacement, absolute };

struct ModelConfig {
  int k = 66;      // channels = 3 * joint count
  int t_in = 50;   // input control threshold (frames)
  int t_out = 10;  // output control threshold (frames)
  double lambda = 0.8;
  int n_s = 1;   // spatial encoding/decoding units
  int n_t = 20;  // temporal encoding/decoding units
  double alpha_v = 1.0;
  double alpha_a = 1.0;

  // Variant switches used by the ablation axes; defaults are the full model.
  BlockStyle block_style = BlockStyle::ln_residual;
  bool use_dct = true;
  OutputMode output_mode = OutputMode::displacement;
  PadMode pad_mode = PadMode::prepend_first;

  void validate() const;  // throws ConfigError on out-of-range values
  ControlConfig control() const { return {t_in, t_out, effective_lambda(), pad_mode}; }

  // Truncating frequency rows is meaningless when the transform is the
  // identity, so the no-DCT variant runs with the filter wide open.
  double effective_lambda() const { return use_dct ? lambda : 1.0; }
};

/// One fully-connected unit of width n: weight (n x n), bias, LN scale and
/// shift (each length n).
struct MlpBlock {
  Matrix w;
  std::vector<double> b;
  std::vector<double> gamma;
  std::vector<double> beta;

  std::size_t width() const { return b.size(); }
};

/// All learnable state. Also reused as the gradient container: a gradient is
/// the same tree of shapes with d(loss)/d(entry) in every slot.
struct FsgnParams {
  std::vector<MlpBlock> spatial_enc;   // width k
  std::vector<MlpBlock> temporal_enc;  // width t_in
  std::vector<MlpBlock> temporal_dec;  // width t_in
  std::vector<MlpBlock> spatial_dec;   // width k
};

using Gradients = FsgnParams;

inline constexpr double kLayerNormEpsilon = 1e-5;

/// Per-row layer normalization over the channel axis, population variance.
Matrix layer_norm(const Matrix& m, std::span<const double> gamma, std::span<const double> beta);

Matrix block_forward(const MlpBlock& blk, const Matrix& m,
                     BlockStyle style = BlockStyle::ln_residual);

/// Spatial blocks, transpose, temporal blocks. Returns a k x t_in matrix.
Matrix encode(const FsgnParams& p, const Matrix& e0,
              BlockStyle style = BlockStyle::ln_residual);

/// Mirror of encode: temporal blocks, transpose, spatial blocks. t_in x k.
Matrix decode(const FsgnParams& p, const Matrix& e_hat,
              BlockStyle style = BlockStyle::ln_residual);

/// Full pipeline: input control, encoder, decoder, output control, and
/// reconstruction of absolute coordinates from the predicted displacements.
/// Accepts any observation length >= 1; returns t_out x k.
Matrix forward(const FsgnParams& p, const ModelConfig& cfg, const Matrix& x_obs);

/// A ForwardFn closure over (p, cfg) suitable for rollout().
ForwardFn make_forward_fn(const FsgnParams& p, const ModelConfig& cfg);

FsgnParams init_params(const ModelConfig& cfg, std::uint64_t seed);
FsgnParams zeros_like(const ModelConfig& cfg);

/// 2*n_s*(k^2 + 3k) + 2*n_t*(t_in^2 + 3*t_in)
std::uint64_t param_count(const ModelConfig& cfg);

// ---------------------------------------------------------------------------
// Cached forward pass + reverse sweep. The tape holds exactly what the
// backward pass needs; everything linear (time control, DCT pair, low-pass,
// transpose, the final row slice) is re-derived from the config.

struct BlockTape {
  Matrix input;                 // block input (needed for dW)
  Matrix xhat;                  // normalized pre-scale activations (ln_residual)
  std::vector<double> inv_std;  // per-row 1/sqrt(var + eps)    (ln_residual)
  Matrix pre;                   // affine output                 (relu mask)
};

struct ForwardTape {
  Matrix window;          // t_in x k after time control
  std::vector<double> z;  // last observed frame
  std::vector<BlockTape> spatial_enc, temporal_enc, temporal_dec, spatial_dec;
  Matrix decoder_out;     // t_in x k, pre-IDCT
  Matrix prediction;      // t_out x k, absolute coordinates (or raw output in
                          // absolute mode, which is the same thing)
};

Matrix forward_cached(const FsgnParams& p, const ModelConfig& cfg, const Matrix& x_obs,
                      ForwardTape& tape);

/// Accumulates d(loss)/d(params) into grad given d(loss)/d(prediction).
void backward_through_model(const FsgnParams& p, const ModelConfig& cfg,
                            const ForwardTape& tape, const Matrix& d_prediction,
                            Gradients& grad);

// ---------------------------------------------------------------------------
// Parameter-tree traversal and the checkpoint pair (model.json + model.bin).
// Tensor order is fixed: spatial_enc, temporal_enc, temporal_dec, spatial_dec;
// within a block w, b, gamma, beta. model.bin is the concatenation of all
// tensors in that order, row-major, 64-bit little-endian, no padding.

struct TensorView {
  std::string name;
  double* data;
  std::size_t count;
  std::vector<std::size_t> shape;
};

std::vector<TensorView> tensor_order(FsgnParams& p);

struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  int epoch = 0;
  FsgnParams params;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& json_path,
                     const std::string& bin_path);

/// Loads the json/bin pair; bin_path defaults to json_path with its extension
/// replaced by ".bin". Throws DataError when the binary size disagrees with
/// the declared tensor order.
Checkpoint load_checkpoint(const std::string& json_path, const std::string& bin_path = "");

}  // namespace fsgn
