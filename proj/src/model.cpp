#include "model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "errors.hpp"
#include "json.hpp"
#include "rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace fsgn {

namespace {

using ordered_json = nlohmann::ordered_json;

// a^T * b accumulated into acc (shapes: a R x N, b R x M, acc N x M).
void add_atb(const Matrix& a, const Matrix& b, Matrix& acc) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* a_row = a.row(r).data();
    const double* b_row = b.row(r).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ai = a_row[i];
      if (ai == 0.0) continue;
      double* acc_row = acc.row(i).data();
      for (std::size_t j = 0; j < b.cols(); ++j) {
        acc_row[j] += ai * b_row[j];
      }
    }
  }
}

// a * w^T (shapes: a R x N, w M x N) -> R x M.
Matrix mul_abt(const Matrix& a, const Matrix& w) {
  Matrix out(a.rows(), w.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* a_row = a.row(r).data();
    double* out_row = out.row(r).data();
    for (std::size_t m = 0; m < w.rows(); ++m) {
      const double* w_row = w.row(m).data();
      double acc = 0.0;
      for (std::size_t n = 0; n < a.cols(); ++n) acc += a_row[n] * w_row[n];
      out_row[m] = acc;
    }
  }
  return out;
}

void check_width(const MlpBlock& blk, const Matrix& m) {
  if (m.cols() != blk.width() || blk.w.rows() != blk.width() ||
      blk.w.cols() != blk.width()) {
    throw_invalid("block_forward: input width " + std::to_string(m.cols()) +
                  " does not match block width " + std::to_string(blk.width()));
  }
}

Matrix block_apply(const MlpBlock& blk, const Matrix& m, BlockStyle style, BlockTape* tape) {
  check_width(blk, m);
  if (tape) tape->input = m;

  Matrix a = affine(m, blk.w, blk.b);
  switch (style) {
    case BlockStyle::ln_residual: {
      Matrix out(a.rows(), a.cols());
      if (tape) {
        tape->xhat = Matrix(a.rows(), a.cols());
        tape->inv_std.assign(a.rows(), 0.0);
      }
      const std::size_t n = a.cols();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* row = a.row(r).data();
        double mean = 0.0;
        for (std::size_t c = 0; c < n; ++c) mean += row[c];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          const double d = row[c] - mean;
          var += d * d;
        }
        var /= static_cast<double>(n);
        const double inv_std = 1.0 / std::sqrt(var + kLayerNormEpsilon);
        if (tape) tape->inv_std[r] = inv_std;
        for (std::size_t c = 0; c < n; ++c) {
          const double xhat = (row[c] - mean) * inv_std;
          if (tape) tape->xhat(r, c) = xhat;
          out(r, c) = blk.gamma[c] * xhat + blk.beta[c] + m(r, c);
        }
      }
      return out;
    }
    case BlockStyle::fc_residual: {
      for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += m.data()[i];
      return a;
    }
    case BlockStyle::relu: {
      if (tape) tape->pre = a;
      for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = std::max(0.0, a.data()[i]);
      return a;
    }
  }
  throw_invalid("block_forward: unknown block style");
}

// Reverse sweep of one block. Accumulates parameter gradients into gblk and
// returns the gradient with respect to the block input.
Matrix block_backward(const MlpBlock& blk, BlockStyle style, const BlockTape& tape,
                      const Matrix& d_out, MlpBlock& gblk) {
  Matrix da;
  switch (style) {
    case BlockStyle::ln_residual: {
      const std::size_t n = d_out.cols();
      da = Matrix(d_out.rows(), n);
      for (std::size_t r = 0; r < d_out.rows(); ++r) {
        const double* g = d_out.row(r).data();
        const double* xhat = tape.xhat.row(r).data();
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          gblk.gamma[c] += g[c] * xhat[c];
          gblk.beta[c] += g[c];
          const double dxhat = g[c] * blk.gamma[c];
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat[c];
        }
        const double mean_dxhat = sum_dxhat / static_cast<double>(n);
        const double mean_dxhat_xhat = sum_dxhat_xhat / static_cast<double>(n);
        double* da_row = da.row(r).data();
        for (std::size_t c = 0; c < n; ++c) {
          const double dxhat = g[c] * blk.gamma[c];
          da_row[c] = tape.inv_std[r] * (dxhat - mean_dxhat - xhat[c] * mean_dxhat_xhat);
        }
      }
      break;
    }
    case BlockStyle::fc_residual:
      da = d_out;
      break;
    case BlockStyle::relu: {
      da = d_out;
      for (std::size_t i = 0; i < da.size(); ++i) {
        if (tape.pre.data()[i] <= 0.0) da.data()[i] = 0.0;
      }
      break;
    }
  }

  add_atb(tape.input, da, gblk.w);
  for (std::size_t r = 0; r < da.rows(); ++r) {
    const double* row = da.row(r).data();
    for (std::size_t c = 0; c < da.cols(); ++c) gblk.b[c] += row[c];
  }

  Matrix d_in = mul_abt(da, blk.w);
  if (style != BlockStyle::relu) {
    for (std::size_t i = 0; i < d_in.size(); ++i) d_in.data()[i] += d_out.data()[i];
  }
  return d_in;
}

MlpBlock make_block(std::size_t width) {
  MlpBlock blk;
  blk.w = Matrix(width, width);
  blk.b.assign(width, 0.0);
  blk.gamma.assign(width, 0.0);
  blk.beta.assign(width, 0.0);
  return blk;
}

const char* style_name(BlockStyle s) {
  switch (s) {
    case BlockStyle::ln_residual: return "ln_residual";
    case BlockStyle::fc_residual: return "fc_residual";
    case BlockStyle::relu: return "relu";
  }
  return "?";
}

BlockStyle style_from_name(const std::string& s) {
  if (s == "ln_residual") return BlockStyle::ln_residual;
  if (s == "fc_residual") return BlockStyle::fc_residual;
  if (s == "relu") return BlockStyle::relu;
  throw ConfigError("unknown block_style '" + s + "'");
}

}  // namespace

void ModelConfig::validate() const {
  if (k < 3 || k % 3 != 0) {
    throw ConfigError("model.k must be a positive multiple of 3, got " + std::to_string(k));
  }
  if (t_in < 1) throw ConfigError("model.t_in must be >= 1");
  if (t_out < 1) throw ConfigError("model.t_out must be >= 1");
  if (t_out > t_in) {
    throw ConfigError("model.t_out (" + std::to_string(t_out) +
                      ") must not exceed model.t_in (" + std::to_string(t_in) +
                      "); longer evaluation horizons are reached by rollout");
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw ConfigError("model.lambda must be in (0, 1]");
  }
  if (n_s < 0 || n_t < 0) throw ConfigError("model.n_s/n_t must be >= 0");
  if (alpha_v < 0.0 || alpha_a < 0.0) throw ConfigError("model.alpha_v/alpha_a must be >= 0");
}

Matrix layer_norm(const Matrix& m, std::span<const double> gamma, std::span<const double> beta) {
  if (gamma.size() != m.cols() || beta.size() != m.cols()) {
    throw_invalid("layer_norm: gamma/beta length does not match channel count");
  }
  Matrix out(m.rows(), m.cols());
  const std::size_t n = m.cols();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r).data();
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += row[c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = row[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    for (std::size_t c = 0; c < n; ++c) {
      out(r, c) = gamma[c] * ((row[c] - mean) * inv_std) + beta[c];
    }
  }
  return out;
}

Matrix block_forward(const MlpBlock& blk, const Matrix& m, BlockStyle style) {
  return block_apply(blk, m, style, nullptr);
}

Matrix encode(const FsgnParams& p, const Matrix& e0, BlockStyle style) {
  Matrix e = e0;
  for (const MlpBlock& blk : p.spatial_enc) e = block_apply(blk, e, style, nullptr);
  e = transpose(e);
  for (const MlpBlock& blk : p.temporal_enc) e = block_apply(blk, e, style, nullptr);
  return e;
}

Matrix decode(const FsgnParams& p, const Matrix& e_hat, BlockStyle style) {
  Matrix d = e_hat;
  for (const MlpBlock& blk : p.temporal_dec) d = block_apply(blk, d, style, nullptr);
  d = transpose(d);
  for (const MlpBlock& blk : p.spatial_dec) d = block_apply(blk, d, style, nullptr);
  return d;
}

Matrix forward(const FsgnParams& p, const ModelConfig& cfg, const Matrix& x_obs) {
  ForwardTape tape;
  return forward_cached(p, cfg, x_obs, tape);
}

ForwardFn make_forward_fn(const FsgnParams& p, const ModelConfig& cfg) {
  return [&p, cfg](const Matrix& history) { return forward(p, cfg, history); };
}

Matrix forward_cached(const FsgnParams& p, const ModelConfig& cfg, const Matrix& x_obs,
                      ForwardTape& tape) {
  if (x_obs.cols() != static_cast<std::size_t>(cfg.k)) {
    throw_invalid("forward: observation has " + std::to_string(x_obs.cols()) +
                  " channels, config expects " + std::to_string(cfg.k));
  }
  const BlockStyle style = cfg.block_style;

  tape.window = time_control_in(x_obs, cfg.t_in, cfg.pad_mode);
  tape.z.assign(tape.window.row(tape.window.rows() - 1).begin(),
                tape.window.row(tape.window.rows() - 1).end());

  Matrix e = cfg.use_dct ? lowpass(dct(tape.window), cfg.lambda) : tape.window;

  tape.spatial_enc.resize(p.spatial_enc.size());
  for (std::size_t i = 0; i < p.spatial_enc.size(); ++i) {
    e = block_apply(p.spatial_enc[i], e, style, &tape.spatial_enc[i]);
  }
  e = transpose(e);
  tape.temporal_enc.resize(p.temporal_enc.size());
  for (std::size_t j = 0; j < p.temporal_enc.size(); ++j) {
    e = block_apply(p.temporal_enc[j], e, style, &tape.temporal_enc[j]);
  }

  tape.temporal_dec.resize(p.temporal_dec.size());
  for (std::size_t j = 0; j < p.temporal_dec.size(); ++j) {
    e = block_apply(p.temporal_dec[j], e, style, &tape.temporal_dec[j]);
  }
  e = transpose(e);
  tape.spatial_dec.resize(p.spatial_dec.size());
  for (std::size_t i = 0; i < p.spatial_dec.size(); ++i) {
    e = block_apply(p.spatial_dec[i], e, style, &tape.spatial_dec[i]);
  }
  tape.decoder_out = e;

  const Matrix recon = cfg.use_dct ? idct(e) : e;
  Matrix pred(static_cast<std::size_t>(cfg.t_out), recon.cols());
  std::memcpy(pred.data(), recon.data(), pred.size() * sizeof(double));
  if (cfg.output_mode == OutputMode::displacement) {
    for (std::size_t r = 0; r < pred.rows(); ++r) {
      double* row = pred.row(r).data();
      for (std::size_t c = 0; c < pred.cols(); ++c) row[c] += tape.z[c];
    }
  }
  tape.prediction = pred;
  return pred;
}

void backward_through_model(const FsgnParams& p, const ModelConfig& cfg,
                            const ForwardTape& tape, const Matrix& d_prediction,
                            Gradients& grad) {
  const BlockStyle style = cfg.block_style;

  // The additive z term carries no parameters, so displacement and absolute
  // modes back-propagate identically from here.
  Matrix d_recon(static_cast<std::size_t>(cfg.t_in), static_cast<std::size_t>(cfg.k));
  std::memcpy(d_recon.data(), d_prediction.data(), d_prediction.size() * sizeof(double));

  // Adjoint of the orthonormal IDCT is the DCT.
  Matrix d = cfg.use_dct ? dct(d_recon) : std::move(d_recon);

  for (std::size_t i = p.spatial_dec.size(); i-- > 0;) {
    d = block_backward(p.spatial_dec[i], style, tape.spatial_dec[i], d, grad.spatial_dec[i]);
  }
  d = transpose(d);
  for (std::size_t j = p.temporal_dec.size(); j-- > 0;) {
    d = block_backward(p.temporal_dec[j], style, tape.temporal_dec[j], d, grad.temporal_dec[j]);
  }
  for (std::size_t j = p.temporal_enc.size(); j-- > 0;) {
    d = block_backward(p.temporal_enc[j], style, tape.temporal_enc[j], d, grad.temporal_enc[j]);
  }
  d = transpose(d);
  for (std::size_t i = p.spatial_enc.size(); i-- > 0;) {
    d = block_backward(p.spatial_enc[i], style, tape.spatial_enc[i], d, grad.spatial_enc[i]);
  }
  // Everything upstream (low-pass, DCT, time control) touches only the
  // observation, never a parameter.
}

FsgnParams zeros_like(const ModelConfig& cfg) {
  FsgnParams p;
  const auto k = static_cast<std::size_t>(cfg.k);
  const auto t = static_cast<std::size_t>(cfg.t_in);
  for (int i = 0; i < cfg.n_s; ++i) p.spatial_enc.push_back(make_block(k));
  for (int j = 0; j < cfg.n_t; ++j) p.temporal_enc.push_back(make_block(t));
  for (int j = 0; j < cfg.n_t; ++j) p.temporal_dec.push_back(make_block(t));
  for (int i = 0; i < cfg.n_s; ++i) p.spatial_dec.push_back(make_block(k));
  return p;
}

FsgnParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  FsgnParams p = zeros_like(cfg);
  Rng rng(seed);
  for (TensorView& t : tensor_order(p)) {
    if (t.name.ends_with(".w")) {
      const double bound = std::sqrt(6.0 / (2.0 * static_cast<double>(t.shape[0])));
      for (std::size_t i = 0; i < t.count; ++i) t.data[i] = rng.uniform(-bound, bound);
    } else if (t.name.ends_with(".gamma")) {
      for (std::size_t i = 0; i < t.count; ++i) t.data[i] = 1.0;
    }
    // biases and beta stay zero
  }
  return p;
}

std::uint64_t param_count(const ModelConfig& cfg) {
  const auto k = static_cast<std::uint64_t>(cfg.k);
  const auto t = static_cast<std::uint64_t>(cfg.t_in);
  return 2 * static_cast<std::uint64_t>(cfg.n_s) * (k * k + 3 * k) +
         2 * static_cast<std::uint64_t>(cfg.n_t) * (t * t + 3 * t);
}

std::vector<TensorView> tensor_order(FsgnParams& p) {
  std::vector<TensorView> order;
  auto add_group = [&order](const char* group, std::vector<MlpBlock>& blocks) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      MlpBlock& blk = blocks[i];
      const std::string prefix = std::string(group) + "[" + std::to_string(i) + "]";
      const std::size_t n = blk.width();
      order.push_back({prefix + ".w", blk.w.data(), n * n, {n, n}});
      order.push_back({prefix + ".b", blk.b.data(), n, {n}});
      order.push_back({prefix + ".gamma", blk.gamma.data(), n, {n}});
      order.push_back({prefix + ".beta", blk.beta.data(), n, {n}});
    }
  };
  add_group("spatial_enc", p.spatial_enc);
  add_group("temporal_enc", p.temporal_enc);
  add_group("temporal_dec", p.temporal_dec);
  add_group("spatial_dec", p.spatial_dec);
  return order;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& json_path,
                     const std::string& bin_path) {
  ordered_json config;
  config["k"] = ckpt.config.k;
  config["t_in"] = ckpt.config.t_in;
  config["t_out"] = ckpt.config.t_out;
  config["lambda"] = ckpt.config.lambda;
  config["n_s"] = ckpt.config.n_s;
  config["n_t"] = ckpt.config.n_t;
  config["alpha_v"] = ckpt.config.alpha_v;
  config["alpha_a"] = ckpt.config.alpha_a;
  // Variant switches appear only when they differ from the full model, so
  // default checkpoints keep the plain eight-key schema.
  if (ckpt.config.block_style != BlockStyle::ln_residual) {
    config["block_style"] = style_name(ckpt.config.block_style);
  }
  if (!ckpt.config.use_dct) config["use_dct"] = false;
  if (ckpt.config.output_mode != OutputMode::displacement) config["output_mode"] = "absolute";
  if (ckpt.config.pad_mode != PadMode::prepend_first) config["pad_mode"] = "append_last";

  FsgnParams& params = const_cast<FsgnParams&>(ckpt.params);
  ordered_json order = ordered_json::array();
  for (const TensorView& t : tensor_order(params)) {
    order.push_back({{"name", t.name}, {"shape", t.shape}});
  }

  ordered_json doc;
  doc["config"] = config;
  doc["seed"] = ckpt.seed;
  doc["epoch"] = ckpt.epoch;
  doc["tensor_order"] = order;

  std::ofstream jf(json_path, std::ios::binary);
  if (!jf) throw DataError("cannot write checkpoint " + json_path);
  jf << doc.dump(2) << "\n";
  jf.close();

  std::ofstream bf(bin_path, std::ios::binary);
  if (!bf) throw DataError("cannot write checkpoint " + bin_path);
  for (const TensorView& t : tensor_order(params)) {
    bf.write(reinterpret_cast<const char*>(t.data),
             static_cast<std::streamsize>(t.count * sizeof(double)));
  }
  if (!bf) throw DataError("short write to " + bin_path);
}

Checkpoint load_checkpoint(const std::string& json_path, const std::string& bin_path_in) {
  std::ifstream jf(json_path, std::ios::binary);
  if (!jf) throw DataError("cannot open checkpoint " + json_path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(jf);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + json_path + ": " + e.what());
  }

  Checkpoint ckpt;
  try {
    const auto& config = doc.at("config");
    ckpt.config.k = config.at("k").get<int>();
    ckpt.config.t_in = config.at("t_in").get<int>();
    ckpt.config.t_out = config.at("t_out").get<int>();
    ckpt.config.lambda = config.at("lambda").get<double>();
    ckpt.config.n_s = config.at("n_s").get<int>();
    ckpt.config.n_t = config.at("n_t").get<int>();
    ckpt.config.alpha_v = config.at("alpha_v").get<double>();
    ckpt.config.alpha_a = config.at("alpha_a").get<double>();
    if (config.contains("block_style")) {
      ckpt.config.block_style = style_from_name(config.at("block_style").get<std::string>());
    }
    if (config.contains("use_dct")) ckpt.config.use_dct = config.at("use_dct").get<bool>();
    if (config.contains("output_mode")) {
      const auto mode = config.at("output_mode").get<std::string>();
      if (mode != "displacement" && mode != "absolute") {
        throw DataError("checkpoint: unknown output_mode '" + mode + "'");
      }
      ckpt.config.output_mode =
          mode == "absolute" ? OutputMode::absolute : OutputMode::displacement;
    }
    if (config.contains("pad_mode")) {
      const auto mode = config.at("pad_mode").get<std::string>();
      if (mode != "prepend_first" && mode != "append_last") {
        throw DataError("checkpoint: unknown pad_mode '" + mode + "'");
      }
      ckpt.config.pad_mode =
          mode == "append_last" ? PadMode::append_last : PadMode::prepend_first;
    }
    ckpt.seed = doc.at("seed").get<std::uint64_t>();
    ckpt.epoch = doc.at("epoch").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + json_path + ": " + e.what());
  }
  try {
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw DataError("checkpoint " + json_path + ": " + e.what());
  }

  ckpt.params = zeros_like(ckpt.config);
  std::vector<TensorView> order = tensor_order(ckpt.params);

  const auto& declared = doc.at("tensor_order");
  if (declared.size() != order.size()) {
    throw DataError("checkpoint " + json_path + ": tensor_order lists " +
                    std::to_string(declared.size()) + " tensors, config implies " +
                    std::to_string(order.size()));
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto name = declared[i].at("name").get<std::string>();
    const auto shape = declared[i].at("shape").get<std::vector<std::size_t>>();
    if (name != order[i].name || shape != order[i].shape) {
      throw DataError("checkpoint " + json_path + ": tensor " + std::to_string(i) +
                      " is '" + name + "', expected '" + order[i].name + "'");
    }
    total += order[i].count;
  }

  std::string bin_path = bin_path_in;
  if (bin_path.empty()) {
    bin_path = (std::filesystem::path(json_path).replace_extension(".bin")).string();
  }
  std::ifstream bf(bin_path, std::ios::binary | std::ios::ate);
  if (!bf) throw DataError("cannot open checkpoint " + bin_path);
  const auto file_size = static_cast<std::size_t>(bf.tellg());
  if (file_size != total * sizeof(double)) {
    throw DataError("checkpoint " + bin_path + ": size " + std::to_string(file_size) +
                    " bytes does not match tensor_order (" +
                    std::to_string(total * sizeof(double)) + " bytes)");
  }
  bf.seekg(0);
  for (TensorView& t : order) {
    bf.read(reinterpret_cast<char*>(t.data),
            static_cast<std::streamsize>(t.count * sizeof(double)));
  }
  if (!bf) throw DataError("short read from " + bin_path);
  return ckpt;
}

}  // namespace fsgn
