#include "sequence_control.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "errors.hpp"

namespace fsgn {

Matrix time_control_in(const Matrix& x, int t_in, PadMode pad_mode) {
  if (t_in < 1) throw_invalid("time_control_in: t_in must be >= 1");
  if (x.rows() == 0) throw_invalid("time_control_in: empty sequence");

  const std::size_t t = x.rows();
  const std::size_t want = static_cast<std::size_t>(t_in);
  Matrix out(want, x.cols());
  if (t >= want) {
    const std::size_t first = t - want;
    std::memcpy(out.data(), x.data() + first * x.cols(), want * x.cols() * sizeof(double));
    return out;
  }

  const std::size_t pad = want - t;
  if (pad_mode == PadMode::prepend_first) {
    for (std::size_t r = 0; r < pad; ++r) {
      std::copy(x.row(0).begin(), x.row(0).end(), out.row(r).begin());
    }
    std::memcpy(out.data() + pad * x.cols(), x.data(), t * x.cols() * sizeof(double));
  } else {
    std::memcpy(out.data(), x.data(), t * x.cols() * sizeof(double));
    for (std::size_t r = t; r < want; ++r) {
      std::copy(x.row(t - 1).begin(), x.row(t - 1).end(), out.row(r).begin());
    }
  }
  return out;
}

std::size_t lowpass_cutoff(std::size_t rows, double lambda) {
  // 1e-9 absorbs cases like 0.6 * 50 evaluating to 29.999999999999996.
  return static_cast<std::size_t>(std::floor(lambda * static_cast<double>(rows) + 1e-9));
}

Matrix lowpass(const Matrix& coeffs, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw_invalid("lowpass: lambda must be in (0, 1], got " + std::to_string(lambda));
  }
  const std::size_t keep = std::min(coeffs.rows(), lowpass_cutoff(coeffs.rows(), lambda));
  Matrix out(coeffs.rows(), coeffs.cols());
  std::memcpy(out.data(), coeffs.data(), keep * coeffs.cols() * sizeof(double));
  return out;
}

Matrix input_pipeline(const Matrix& x, const ControlConfig& cfg) {
  return lowpass(dct(time_control_in(x, cfg.t_in, cfg.pad_mode)), cfg.lambda);
}

Matrix output_pipeline(const Matrix& d, const ControlConfig& cfg) {
  if (cfg.t_out < 1) throw_invalid("output_pipeline: t_out must be >= 1");
  if (static_cast<std::size_t>(cfg.t_out) > d.rows()) {
    throw_invalid("output_pipeline: t_out " + std::to_string(cfg.t_out) +
                  " exceeds sequence length " + std::to_string(d.rows()) +
                  " (use rollout for longer horizons)");
  }
  const Matrix full = idct(d);
  Matrix out(static_cast<std::size_t>(cfg.t_out), d.cols());
  std::memcpy(out.data(), full.data(), out.size() * sizeof(double));
  return out;
}

Matrix rollout(const Matrix& history, const ForwardFn& model, int t_out, int horizon_frames) {
  if (horizon_frames < 1) throw_invalid("rollout: horizon must be >= 1");
  if (t_out < 1) throw_invalid("rollout: t_out must be >= 1");

  const std::size_t horizon = static_cast<std::size_t>(horizon_frames);
  Matrix generated(0, history.cols());
  Matrix working = history;
  std::size_t produced = 0;

  while (produced < horizon) {
    const Matrix chunk = model(working);
    if (chunk.cols() != history.cols() ||
        chunk.rows() != static_cast<std::size_t>(t_out)) {
      throw_invalid("rollout: model returned " + std::to_string(chunk.rows()) + "x" +
                    std::to_string(chunk.cols()) + ", expected " + std::to_string(t_out) +
                    "x" + std::to_string(history.cols()));
    }

    Matrix next_working(working.rows() + chunk.rows(), working.cols());
    std::memcpy(next_working.data(), working.data(), working.size() * sizeof(double));
    std::memcpy(next_working.data() + working.size(), chunk.data(),
                chunk.size() * sizeof(double));
    working = std::move(next_working);

    Matrix next_generated(produced + chunk.rows(), history.cols());
    std::memcpy(next_generated.data(), generated.data(), generated.size() * sizeof(double));
    std::memcpy(next_generated.data() + generated.size(), chunk.data(),
                chunk.size() * sizeof(double));
    generated = std::move(next_generated);
    produced += chunk.rows();
  }

  Matrix out(horizon, history.cols());
  std::memcpy(out.data(), generated.data(), out.size() * sizeof(double));
  return out;
}

}  // namespace fsgn
