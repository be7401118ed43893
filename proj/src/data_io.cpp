#include "data_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "errors.hpp"
#include "rng.hpp"

namespace fsgn {

namespace {

// Parses "key=<positive int>" and returns the int.
int parse_header_field(std::istringstream& in, const std::string& key, const std::string& path) {
  std::string token;
  if (!(in >> token) || !token.starts_with(key + "=")) {
    throw MalformedHeaderError(path + ": header field '" + key + "=<int>' missing or out of order");
  }
  const std::string value = token.substr(key.size() + 1);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || out < 0) {
    throw MalformedHeaderError(path + ": bad value '" + value + "' for header field " + key);
  }
  return out;
}

}  // namespace

SkeletonSequence load_sequence(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open sequence file " + path);

  std::string header;
  if (!std::getline(in, header)) throw MalformedHeaderError(path + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (!header.starts_with("#")) {
    throw MalformedHeaderError(path + ": header must start with '#'");
  }

  std::istringstream hs(header.substr(1));
  SkeletonSequence seq;
  seq.fps = parse_header_field(hs, "fps", path);
  seq.joints = parse_header_field(hs, "joints", path);
  const int dims = parse_header_field(hs, "dims", path);
  const int frames = parse_header_field(hs, "frames", path);
  std::string extra;
  if (hs >> extra) throw MalformedHeaderError(path + ": unexpected trailing header token '" + extra + "'");
  if (dims != 3) throw MalformedHeaderError(path + ": dims must be 3, got " + std::to_string(dims));
  if (seq.fps <= 0) throw MalformedHeaderError(path + ": fps must be positive");
  if (seq.joints <= 0) throw MalformedHeaderError(path + ": joints must be positive");

  const std::size_t cols = static_cast<std::size_t>(seq.joints) * 3;
  seq.frames = Matrix(static_cast<std::size_t>(frames), cols);

  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= seq.frames.rows()) {
      throw DataError(path + ": more data rows than the declared " + std::to_string(frames) +
                      " frames");
    }
    std::size_t col = 0;
    const char* cursor = line.c_str();
    while (*cursor != '\0') {
      char* end = nullptr;
      const double value = std::strtod(cursor, &end);
      if (end == cursor) {
        throw RaggedRowError(path + ": row " + std::to_string(row + 1) +
                             ": unparsable value at column " + std::to_string(col + 1));
      }
      if (!std::isfinite(value)) {
        throw NonFiniteValueError(path + ": row " + std::to_string(row + 1) +
                                  ": non-finite value at column " + std::to_string(col + 1));
      }
      if (col >= cols) {
        throw RaggedRowError(path + ": row " + std::to_string(row + 1) + " has more than " +
                             std::to_string(cols) + " values");
      }
      seq.frames(row, col++) = value;
      cursor = end;
      while (*cursor == ' ' || *cursor == '\t') ++cursor;
      if (*cursor == ',') {
        ++cursor;
        while (*cursor == ' ' || *cursor == '\t') ++cursor;
      } else if (*cursor != '\0') {
        throw RaggedRowError(path + ": row " + std::to_string(row + 1) +
                             ": expected ',' separator at column " + std::to_string(col));
      }
    }
    if (col != cols) {
      throw RaggedRowError(path + ": row " + std::to_string(row + 1) + " has " +
                           std::to_string(col) + " values, expected " + std::to_string(cols));
    }
    ++row;
  }
  if (row != seq.frames.rows()) {
    throw DataError(path + ": " + std::to_string(row) + " data rows, header declares " +
                    std::to_string(frames));
  }

  seq.label = std::filesystem::path(path).stem().string();
  return seq;
}

void save_sequence(const SkeletonSequence& seq, const std::string& path) {
  if (seq.frames.cols() != static_cast<std::size_t>(seq.joints) * 3) {
    throw_invalid("save_sequence: frame width " + std::to_string(seq.frames.cols()) +
                  " does not equal 3 * joints");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write sequence file " + path);

  out << "# fps=" << seq.fps << " joints=" << seq.joints << " dims=3 frames="
      << seq.frames.rows() << "\n";
  char buf[64];
  for (std::size_t r = 0; r < seq.frames.rows(); ++r) {
    const double* row = seq.frames.row(r).data();
    for (std::size_t c = 0; c < seq.frames.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      if (c) out << ',';
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw DataError("short write to " + path);
}

std::vector<WindowSample> make_windows(const SkeletonSequence& seq, int t_obs, int horizon,
                                       int stride) {
  if (t_obs < 1 || horizon < 0) throw_invalid("make_windows: t_obs >= 1 and horizon >= 0 required");
  if (stride < 1) throw_invalid("make_windows: stride must be >= 1");

  std::vector<WindowSample> windows;
  const std::size_t span = static_cast<std::size_t>(t_obs) + static_cast<std::size_t>(horizon);
  if (seq.frames.rows() < span) return windows;

  const std::size_t cols = seq.frames.cols();
  for (std::size_t offset = 0; offset + span <= seq.frames.rows();
       offset += static_cast<std::size_t>(stride)) {
    WindowSample w;
    w.label = seq.label;
    w.observed = Matrix(static_cast<std::size_t>(t_obs), cols);
    w.future = Matrix(static_cast<std::size_t>(horizon), cols);
    for (std::size_t r = 0; r < w.observed.rows(); ++r) {
      std::copy(seq.frames.row(offset + r).begin(), seq.frames.row(offset + r).end(),
                w.observed.row(r).begin());
    }
    for (std::size_t r = 0; r < w.future.rows(); ++r) {
      std::copy(seq.frames.row(offset + t_obs + r).begin(),
                seq.frames.row(offset + t_obs + r).end(), w.future.row(r).begin());
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

SkeletonSequence synth_motion(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.frames < 1) throw_invalid("synth_motion: frames must be >= 1");
  if (spec.joints < 1) throw_invalid("synth_motion: joints must be >= 1");
  if (spec.fps < 1) throw_invalid("synth_motion: fps must be >= 1");
  if (spec.n_harmonics < 0) throw_invalid("synth_motion: n_harmonics must be >= 0");

  SkeletonSequence seq;
  seq.fps = spec.fps;
  seq.joints = spec.joints;
  seq.label = "synth_" + std::to_string(seed);
  const std::size_t cols = static_cast<std::size_t>(spec.joints) * 3;
  seq.frames = Matrix(static_cast<std::size_t>(spec.frames), cols);

  Rng rng(seed);
  for (std::size_t c = 0; c < cols; ++c) {
    const double offset = rng.uniform(spec.offset_min, spec.offset_max);
    std::vector<double> amp(spec.n_harmonics), freq(spec.n_harmonics), phase(spec.n_harmonics);
    for (int h = 0; h < spec.n_harmonics; ++h) {
      amp[h] = rng.uniform(spec.amp_min, spec.amp_max);
      freq[h] = rng.uniform(spec.freq_min, spec.freq_max);
      phase[h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    for (std::size_t t = 0; t < seq.frames.rows(); ++t) {
      double value = offset;
      const double seconds = static_cast<double>(t) / spec.fps;
      for (int h = 0; h < spec.n_harmonics; ++h) {
        value += amp[h] * std::sin(2.0 * std::numbers::pi * freq[h] * seconds + phase[h]);
      }
      seq.frames(t, c) = value;
    }
  }
  return seq;
}

Matrix baseline_zero_velocity(const Matrix& observed, int horizon) {
  if (observed.rows() == 0) throw_invalid("baseline_zero_velocity: empty observation");
  if (horizon < 0) throw_invalid("baseline_zero_velocity: negative horizon");
  Matrix out(static_cast<std::size_t>(horizon), observed.cols());
  const auto last = observed.row(observed.rows() - 1);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    std::copy(last.begin(), last.end(), out.row(r).begin());
  }
  return out;
}

Matrix baseline_constant_velocity(const Matrix& observed, int horizon) {
  if (observed.rows() < 2) {
    throw_invalid("baseline_constant_velocity: needs at least 2 observed frames");
  }
  if (horizon < 0) throw_invalid("baseline_constant_velocity: negative horizon");
  Matrix out(static_cast<std::size_t>(horizon), observed.cols());
  const auto last = observed.row(observed.rows() - 1);
  const auto prev = observed.row(observed.rows() - 2);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.row(r).data();
    const double steps = static_cast<double>(r + 1);
    for (std::size_t c = 0; c < out.cols(); ++c) {
      row[c] = last[c] + steps * (last[c] - prev[c]);
    }
  }
  return out;
}

}  // namespace fsgn
