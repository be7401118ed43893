#include "training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "errors.hpp"
#include "rng.hpp"

namespace fsgn {

namespace {

std::atomic<int> g_workers{0};

std::vector<TensorView> tensors_of(const FsgnParams& p) {
  return tensor_order(const_cast<FsgnParams&>(p));
}

void add_tree(Gradients& acc, const Gradients& g) {
  auto a = tensor_order(acc);
  auto b = tensors_of(g);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].count; ++j) a[i].data[j] += b[i].data[j];
  }
}

void scale_tree(Gradients& g, double s) {
  for (TensorView& t : tensor_order(g)) {
    for (std::size_t j = 0; j < t.count; ++j) t.data[j] *= s;
  }
}

double tree_norm(const Gradients& g) {
  double sq = 0.0;
  for (const TensorView& t : tensors_of(g)) {
    for (std::size_t j = 0; j < t.count; ++j) sq += t.data[j] * t.data[j];
  }
  return std::sqrt(sq);
}

// Mean per-joint Euclidean distance between y and x; when dy is non-null,
// accumulates grad_weight * d(mean)/dy. At exact per-joint equality the
// subgradient is taken as zero.
double norm_mean(const Matrix& y, const Matrix& x, double grad_weight, Matrix* dy) {
  const std::size_t frames = y.rows();
  const std::size_t joints = y.cols() / 3;
  const double inv = 1.0 / (static_cast<double>(frames) * static_cast<double>(joints));
  const double factor = grad_weight * inv;
  double sum = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double* yr = y.row(t).data();
    const double* xr = x.row(t).data();
    double* gr = dy ? dy->row(t).data() : nullptr;
    for (std::size_t v = 0; v < joints; ++v) {
      const double d0 = yr[3 * v] - xr[3 * v];
      const double d1 = yr[3 * v + 1] - xr[3 * v + 1];
      const double d2 = yr[3 * v + 2] - xr[3 * v + 2];
      const double n = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
      sum += n;
      if (gr && n > 0.0) {
        gr[3 * v] += factor * d0 / n;
        gr[3 * v + 1] += factor * d1 / n;
        gr[3 * v + 2] += factor * d2 / n;
      }
    }
  }
  return sum * inv;
}

// Adjoint of frame_diff: out[t] = g[t] (t >= 1) - g[t+1] (t + 1 < T).
Matrix frame_diff_adjoint(const Matrix& g) {
  const std::size_t t_count = g.rows();
  Matrix out(t_count, g.cols());
  for (std::size_t t = 0; t < t_count; ++t) {
    double* o = out.row(t).data();
    if (t >= 1) {
      const double* gr = g.row(t).data();
      for (std::size_t c = 0; c < g.cols(); ++c) o[c] += gr[c];
    }
    if (t + 1 < t_count) {
      const double* gn = g.row(t + 1).data();
      for (std::size_t c = 0; c < g.cols(); ++c) o[c] -= gn[c];
    }
  }
  return out;
}

LossParts loss_and_dpred(const Matrix& pred, const Matrix& target, const ModelConfig& cfg,
                         Matrix* dpred) {
  LossParts loss;
  loss.p = norm_mean(pred, target, 1.0, dpred);

  const Matrix pred_vel = frame_diff(pred);
  const Matrix target_vel = frame_diff(target);
  Matrix d_vel(pred.rows(), pred.cols());
  loss.v = norm_mean(pred_vel, target_vel, cfg.alpha_v, dpred ? &d_vel : nullptr);

  const Matrix pred_acc = frame_diff(pred_vel);
  const Matrix target_acc = frame_diff(target_vel);
  Matrix d_acc(pred.rows(), pred.cols());
  loss.a = norm_mean(pred_acc, target_acc, cfg.alpha_a, dpred ? &d_acc : nullptr);

  loss.total = loss.p + cfg.alpha_v * loss.v + cfg.alpha_a * loss.a;

  if (dpred) {
    Matrix d_vel_total = frame_diff_adjoint(d_acc);
    for (std::size_t i = 0; i < d_vel_total.size(); ++i) d_vel_total.data()[i] += d_vel.data()[i];
    const Matrix d_from_kinematics = frame_diff_adjoint(d_vel_total);
    for (std::size_t i = 0; i < dpred->size(); ++i) {
      dpred->data()[i] += d_from_kinematics.data()[i];
    }
  }
  return loss;
}

void check_pair_shapes(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target)) {
    throw_invalid("loss: prediction " + std::to_string(pred.rows()) + "x" +
                  std::to_string(pred.cols()) + " vs target " + std::to_string(target.rows()) +
                  "x" + std::to_string(target.cols()));
  }
  if (pred.cols() % 3 != 0) throw_invalid("loss: channel count must be a multiple of 3");
}

}  // namespace

Matrix frame_diff(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t t = 1; t < x.rows(); ++t) {
    const double* cur = x.row(t).data();
    const double* prev = x.row(t - 1).data();
    double* o = out.row(t).data();
    for (std::size_t c = 0; c < x.cols(); ++c) o[c] = cur[c] - prev[c];
  }
  return out;
}

double mpjpe(const Matrix& y, const Matrix& x, int joints) {
  if (joints < 1 || y.cols() != static_cast<std::size_t>(joints) * 3) {
    throw_invalid("mpjpe: column count " + std::to_string(y.cols()) +
                  " is not 3 * " + std::to_string(joints));
  }
  check_pair_shapes(y, x);
  if (y.rows() == 0) throw_invalid("mpjpe: empty sequences");
  return norm_mean(y, x, 0.0, nullptr);
}

LossParts loss_fsgn(const Matrix& pred_abs, const Matrix& target_abs, const ModelConfig& cfg) {
  check_pair_shapes(pred_abs, target_abs);
  return loss_and_dpred(pred_abs, target_abs, cfg, nullptr);
}

LossParts backward_accumulate(const FsgnParams& p, const ModelConfig& cfg,
                              const Matrix& x_obs, const Matrix& target_abs,
                              Gradients& grad_acc) {
  ForwardTape tape;
  const Matrix pred = forward_cached(p, cfg, x_obs, tape);
  check_pair_shapes(pred, target_abs);

  Matrix dpred(pred.rows(), pred.cols());
  const LossParts loss = loss_and_dpred(pred, target_abs, cfg, &dpred);
  if (!std::isfinite(loss.total)) {
    throw NumericError("backward: non-finite loss (p=" + std::to_string(loss.p) +
                       " v=" + std::to_string(loss.v) + " a=" + std::to_string(loss.a) + ")");
  }
  backward_through_model(p, cfg, tape, dpred, grad_acc);
  return loss;
}

BackwardResult backward(const FsgnParams& p, const ModelConfig& cfg, const Matrix& x_obs,
                        const Matrix& target_abs) {
  BackwardResult result;
  result.grad = zeros_like(cfg);
  result.loss = backward_accumulate(p, cfg, x_obs, target_abs, result.grad);
  return result;
}

OptimizerState make_optimizer_state(const ModelConfig& cfg) {
  return {zeros_like(cfg), zeros_like(cfg), 0};
}

void adam_step(FsgnParams& params, const Gradients& grad, OptimizerState& state, double lr) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

  auto pv = tensor_order(params);
  auto gv = tensors_of(grad);
  auto mv = tensor_order(state.m);
  auto vv = tensor_order(state.v);
  for (std::size_t i = 0; i < pv.size(); ++i) {
    for (std::size_t j = 0; j < pv[i].count; ++j) {
      const double g = gv[i].data[j];
      double& m = mv[i].data[j];
      double& v = vv[i].data[j];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      pv[i].data[j] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(lr_decay > 0.0)) throw ConfigError("train.lr_decay must be > 0");
  if (lr_decay_every < 1) throw ConfigError("train.lr_decay_every must be >= 1");
  if (grad_clip < 0.0) throw ConfigError("train.grad_clip must be >= 0");
}

void set_worker_count(int n) { g_workers.store(n < 0 ? 0 : n); }

int worker_count() {
  const int n = g_workers.load();
  if (n > 0) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Gradients for a batch are summed inside fixed 16-sample chunks (in sample
// order) and the chunk partials reduced in chunk order, so the result does
// not depend on how many workers ran.
constexpr std::size_t kChunkSamples = 16;

struct BatchAccum {
  Gradients grad;
  LossParts loss_sum;
};

LossParts batch_gradient(const FsgnParams& params, const ModelConfig& cfg,
                         const std::vector<WindowSample>& dataset,
                         std::span<const std::size_t> batch, Gradients& out_grad) {
  const std::size_t n_chunks = (batch.size() + kChunkSamples - 1) / kChunkSamples;
  std::vector<BatchAccum> partials;
  partials.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) partials.push_back({zeros_like(cfg), {}});

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto run_chunks = [&]() {
    try {
      for (;;) {
        if (failed.load()) return;
        const std::size_t c = next.fetch_add(1);
        if (c >= n_chunks) return;
        BatchAccum& acc = partials[c];
        const std::size_t begin = c * kChunkSamples;
        const std::size_t end = std::min(begin + kChunkSamples, batch.size());
        for (std::size_t i = begin; i < end; ++i) {
          const WindowSample& sample = dataset[batch[i]];
          const LossParts loss =
              backward_accumulate(params, cfg, sample.observed, sample.future, acc.grad);
          acc.loss_sum.total += loss.total;
          acc.loss_sum.p += loss.p;
          acc.loss_sum.v += loss.v;
          acc.loss_sum.a += loss.a;
        }
      }
    } catch (...) {
      std::scoped_lock lock(error_mu);
      if (!first_error) first_error = std::current_exception();
      failed.store(true);
    }
  };

  const int n_threads = std::min<int>(worker_count(), static_cast<int>(n_chunks));
  if (n_threads <= 1) {
    run_chunks();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(run_chunks);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  LossParts total;
  for (const BatchAccum& acc : partials) {
    add_tree(out_grad, acc.grad);
    total.total += acc.loss_sum.total;
    total.p += acc.loss_sum.p;
    total.v += acc.loss_sum.v;
    total.a += acc.loss_sum.a;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  scale_tree(out_grad, inv);
  total.total *= inv;
  total.p *= inv;
  total.v *= inv;
  total.a *= inv;
  return total;
}

}  // namespace

TrainResult train(const std::vector<WindowSample>& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
  model_cfg.validate();
  train_cfg.validate();
  if (dataset.empty()) throw DataError("train: empty dataset");
  for (const WindowSample& s : dataset) {
    if (s.observed.rows() == 0 || s.observed.cols() != static_cast<std::size_t>(model_cfg.k) ||
        s.future.rows() != static_cast<std::size_t>(model_cfg.t_out) ||
        s.future.cols() != static_cast<std::size_t>(model_cfg.k)) {
      throw DataError("train: window sample shapes do not match the model config");
    }
  }

  TrainResult result;
  result.params = init_params(model_cfg, train_cfg.seed);
  OptimizerState state = make_optimizer_state(model_cfg);
  Rng shuffle_rng(train_cfg.seed ^ 0x5851f42d4c957f2dull);

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t batch_size = static_cast<std::size_t>(train_cfg.batch_size);
  long step = 0;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    const double lr = train_cfg.learning_rate *
                      std::pow(train_cfg.lr_decay, (epoch - 1) / train_cfg.lr_decay_every);

    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(begin + batch_size, order.size());
      Gradients grad = zeros_like(model_cfg);
      LossParts loss;
      try {
        loss = batch_gradient(result.params, model_cfg, dataset,
                              std::span(order).subspan(begin, end - begin), grad);
      } catch (const NumericError& e) {
        throw NumericError("train: step " + std::to_string(step + 1) + ": " + e.what());
      }

      if (train_cfg.grad_clip > 0.0) {
        const double norm = tree_norm(grad);
        if (norm > train_cfg.grad_clip) scale_tree(grad, train_cfg.grad_clip / norm);
      }

      adam_step(result.params, grad, state, lr);
      ++step;
      result.curve.push_back({step, epoch, loss});
    }
  }
  return result;
}

void write_loss_curve_csv(const std::string& path, const std::vector<LossCurvePoint>& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write loss curve " + path);
  out << "step,epoch,loss_total,loss_p,loss_v,loss_a\n";
  char buf[256];
  for (const LossCurvePoint& pt : curve) {
    std::snprintf(buf, sizeof buf, "%ld,%d,%.17g,%.17g,%.17g,%.17g\n", pt.step, pt.epoch,
                  pt.loss.total, pt.loss.p, pt.loss.v, pt.loss.a);
    out << buf;
  }
  if (!out) throw DataError("short write to " + path);
}

}  // namespace fsgn
