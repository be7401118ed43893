#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace fsgn {

/// A single person's joint trajectories: frame t is a row of 3*joints
/// coordinates in millimeters, joint-major (x1, y1, z1, x2, ...).
struct SkeletonSequence {
  int fps = 25;
  int joints = 0;
  Matrix frames;      // T x 3*joints
  std::string label;  // optional activity name (file stem when loaded)
};

/// Text format, one sequence per file:
///   line 1:      # fps=<int> joints=<int> dims=3 frames=<int>
///   lines 2..T+1: 3*joints comma-separated decimal reals
/// Values are written with 17 significant digits so a save/load round trip is
/// bit-exact. Distinct error types: MalformedHeaderError, RaggedRowError,
/// NonFiniteValueError.
SkeletonSequence load_sequence(const std::string& path);
void save_sequence(const SkeletonSequence& seq, const std::string& path);

/// One (observed window, adjacent future window) training or evaluation pair.
struct WindowSample {
  Matrix observed;  // t_obs x K
  Matrix future;    // horizon x K, immediately following observed
  std::string label;
};

/// Sliding windows at offsets 0, stride, 2*stride, ... Empty when the
/// sequence is too short; never an error.
std::vector<WindowSample> make_windows(const SkeletonSequence& seq, int t_obs, int horizon,
                                       int stride);

/// Sum-of-sinusoids generator for desk-scale verification. Every channel is
/// offset + sum_h a_h sin(2 pi f_h t / fps + phi_h), all draws seeded, so the
/// exact continuation of any window is known analytically.
struct SynthSpec {
  int joints = 8;
  int fps = 25;
  int frames = 120;
  int n_harmonics = 3;
  double amp_min = 50.0;    // mm
  double amp_max = 300.0;   // mm
  double freq_min = 0.25;   // Hz
  double freq_max = 4.0;    // Hz
  double offset_min = -500.0;
  double offset_max = 500.0;
};

SkeletonSequence synth_motion(const SynthSpec& spec, std::uint64_t seed);

/// Repeats the last observed frame.
Matrix baseline_zero_velocity(const Matrix& observed, int horizon);

/// Extrapolates the last frame with the last frame-to-frame difference.
Matrix baseline_constant_velocity(const Matrix& observed, int horizon);

}  // namespace fsgn
