#pragma once

#include <functional>

#include "matrix.hpp"

namespace fsgn {

/// Where stationary padding goes when the observed sequence is shorter than
/// the input threshold: copies of the first frame prepended (default), or
/// copies of the last frame appended.
enum class PadMode { prepend_first, append_last };

struct ControlConfig {
  int t_in = 50;
  int t_out = 10;
  double lambda = 0.8;
  PadMode pad_mode = PadMode::prepend_first;
};

/// Cut-or-pad to exactly t_in frames: keep the last t_in rows when the input
/// is long enough, otherwise apply stationary padding.
Matrix time_control_in(const Matrix& x, int t_in, PadMode pad_mode = PadMode::prepend_first);

/// Row index (0-based, exclusive) below which frequency rows survive:
/// floor(lambda * rows), guarded against floating-point slop when
/// lambda * rows is mathematically integral.
std::size_t lowpass_cutoff(std::size_t rows, double lambda);

/// Keep rows 1..floor(lambda*T) (1-based) and zero the rest; output shape
/// equals input shape.
Matrix lowpass(const Matrix& coeffs, double lambda);

/// lowpass(dct(time_control_in(x))): the encoder input E^(0).
Matrix input_pipeline(const Matrix& x, const ControlConfig& cfg);

/// First t_out rows of idct(d). Requires t_out <= rows(d); longer horizons go
/// through rollout.
Matrix output_pipeline(const Matrix& d, const ControlConfig& cfg);

/// One full model pass: maps a history (any length >= 1, K columns) to
/// exactly t_out absolute-coordinate future frames.
using ForwardFn = std::function<Matrix(const Matrix& history)>;

/// Chunked iterative regression: run the model, append its t_out generated
/// frames to the working history, repeat until horizon_frames frames are
/// accumulated, and return exactly the first horizon_frames of them.
Matrix rollout(const Matrix& history, const ForwardFn& model, int t_out, int horizon_frames);

}  // namespace fsgn
