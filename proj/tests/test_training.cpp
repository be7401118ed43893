#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "errors.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "training.hpp"

using namespace fsgn;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.k = 6;
  cfg.t_in = 8;
  cfg.t_out = 4;
  cfg.lambda = 0.8;
  cfg.n_s = 1;
  cfg.n_t = 2;
  return cfg;
}

double loss_at(const FsgnParams& p, const ModelConfig& cfg, const Matrix& x,
               const Matrix& target) {
  return loss_fsgn(forward(p, cfg, x), target, cfg).total;
}

// Central finite differences against the analytic gradient, every parameter.
// bias_jitter moves the biases off zero: with zero biases a relu unit that is
// dead across the whole window produces an exactly-zero column, which lands
// the next block's pre-activations precisely on the kink where central
// differences straddle the subgradient.
double max_gradient_rel_error(const ModelConfig& cfg, std::uint64_t seed,
                              double bias_jitter = 0.0) {
  FsgnParams p = init_params(cfg, seed);
  Rng rng(seed ^ 0xabcdef);
  if (bias_jitter > 0.0) {
    for (TensorView& t : tensor_order(p)) {
      if (t.name.ends_with(".b")) {
        for (std::size_t j = 0; j < t.count; ++j) {
          t.data[j] += rng.uniform(0.5 * bias_jitter, bias_jitter);
        }
      }
    }
  }
  const Matrix x = random_matrix(static_cast<std::size_t>(cfg.t_in) + 3,
                                 static_cast<std::size_t>(cfg.k), rng, 100.0);
  const Matrix target = random_matrix(static_cast<std::size_t>(cfg.t_out),
                                      static_cast<std::size_t>(cfg.k), rng, 100.0);

  const BackwardResult result = backward(p, cfg, x, target);
  Gradients& analytic = const_cast<Gradients&>(result.grad);

  const double h = 1e-5;
  double worst = 0.0;
  auto pv = tensor_order(p);
  auto gv = tensor_order(analytic);
  for (std::size_t i = 0; i < pv.size(); ++i) {
    for (std::size_t j = 0; j < pv[i].count; ++j) {
      double& entry = pv[i].data[j];
      const double saved = entry;
      entry = saved + h;
      const double up = loss_at(p, cfg, x, target);
      entry = saved - h;
      const double down = loss_at(p, cfg, x, target);
      entry = saved;

      const double fd = (up - down) / (2.0 * h);
      const double a = gv[i].data[j];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("frame_diff basics") {
  SUBCASE("constant sequence") {
    Matrix x(4, 2, 7.0);
    const Matrix d = frame_diff(x);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.data()[i] == 0.0);
  }

  SUBCASE("linear ramp has constant velocity and boundary-only acceleration") {
    const double v = 2.5;
    Matrix x(4, 1);
    for (std::size_t t = 0; t < 4; ++t) x(t, 0) = v * static_cast<double>(t);
    const Matrix vel = frame_diff(x);
    CHECK(vel(0, 0) == 0.0);
    CHECK(vel(1, 0) == doctest::Approx(v));
    CHECK(vel(2, 0) == doctest::Approx(v));
    CHECK(vel(3, 0) == doctest::Approx(v));

    const Matrix acc = frame_diff(vel);
    CHECK(acc(0, 0) == 0.0);
    CHECK(acc(1, 0) == doctest::Approx(v));  // spike only at the boundary row
    CHECK(acc(2, 0) == doctest::Approx(0.0));
    CHECK(acc(3, 0) == doctest::Approx(0.0));
  }
}

TEST_CASE("mpjpe") {
  SUBCASE("identical sequences score zero") {
    Rng rng(97);
    const Matrix y = random_matrix(5, 6, rng);
    CHECK(mpjpe(y, y, 2) == 0.0);
  }

  SUBCASE("3-4-5 offset on one joint in one frame") {
    Matrix y(1, 3), x(1, 3);
    y(0, 0) = 3.0;
    y(0, 1) = 4.0;
    CHECK(mpjpe(y, x, 1) == doctest::Approx(5.0));
  }

  SUBCASE("uniform unit offsets") {
    Matrix y(2, 6), x(2, 6);
    for (std::size_t t = 0; t < 2; ++t) {
      y(t, 0) = 1.0;  // joint 0 offset (1,0,0)
      y(t, 3) = 1.0;  // joint 1 offset (1,0,0)
    }
    CHECK(mpjpe(y, x, 2) == doctest::Approx(1.0));
  }

  SUBCASE("shape mismatch throws") {
    const Matrix y(2, 6), x(3, 6);
    CHECK_THROWS_AS(mpjpe(y, x, 2), Error);
  }
}

TEST_CASE("loss_fsgn") {
  ModelConfig cfg = tiny_config();

  SUBCASE("perfect prediction scores zero everywhere") {
    Rng rng(101);
    const Matrix y = random_matrix(4, 6, rng);
    const LossParts loss = loss_fsgn(y, y, cfg);
    CHECK(loss.total == 0.0);
    CHECK(loss.p == 0.0);
    CHECK(loss.v == 0.0);
    CHECK(loss.a == 0.0);
  }

  SUBCASE("alpha_v = alpha_a = 0 reduces the total to L_p") {
    cfg.alpha_v = 0.0;
    cfg.alpha_a = 0.0;
    Rng rng(103);
    const Matrix pred = random_matrix(4, 6, rng);
    const Matrix target = random_matrix(4, 6, rng);
    const LossParts loss = loss_fsgn(pred, target, cfg);
    CHECK(loss.total == loss.p);
    CHECK(loss.v > 0.0);  // still reported, just unweighted
  }

  SUBCASE("constant offset vanishes under differencing") {
    Rng rng(107);
    const Matrix target = random_matrix(5, 6, rng);
    Matrix pred = target;
    for (std::size_t t = 0; t < pred.rows(); ++t) {
      for (std::size_t v = 0; v < 2; ++v) pred(t, 3 * v) += 1.0;  // +1 in x per joint
    }
    cfg.alpha_v = 3.0;
    cfg.alpha_a = 5.0;
    const LossParts loss = loss_fsgn(pred, target, cfg);
    CHECK(loss.p == doctest::Approx(1.0));
    CHECK(loss.v == doctest::Approx(0.0));
    CHECK(loss.a == doctest::Approx(0.0));
    CHECK(loss.total == doctest::Approx(1.0));
  }

  SUBCASE("total is exactly the declared combination") {
    cfg.alpha_v = 0.7;
    cfg.alpha_a = 0.3;
    Rng rng(109);
    const Matrix pred = random_matrix(4, 6, rng);
    const Matrix target = random_matrix(4, 6, rng);
    const LossParts loss = loss_fsgn(pred, target, cfg);
    CHECK(loss.total == loss.p + cfg.alpha_v * loss.v + cfg.alpha_a * loss.a);
  }

  SUBCASE("translating both sequences leaves every component unchanged") {
    Rng rng(113);
    const Matrix pred = random_matrix(4, 6, rng);
    const Matrix target = random_matrix(4, 6, rng);
    const LossParts before = loss_fsgn(pred, target, cfg);

    Matrix pred_shift = pred, target_shift = target;
    const double offset[3] = {12.0, -7.0, 3.0};
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t v = 0; v < 2; ++v) {
        for (std::size_t d = 0; d < 3; ++d) {
          pred_shift(t, 3 * v + d) += offset[d];
          target_shift(t, 3 * v + d) += offset[d];
        }
      }
    }
    const LossParts after = loss_fsgn(pred_shift, target_shift, cfg);
    CHECK(after.p == doctest::Approx(before.p).epsilon(1e-12));
    CHECK(after.v == doctest::Approx(before.v).epsilon(1e-12));
    CHECK(after.a == doctest::Approx(before.a).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  SUBCASE("full model") {
    CHECK(max_gradient_rel_error(tiny_config(), 2024) < 1e-4);
  }

  SUBCASE("no layer norm variant") {
    ModelConfig cfg = tiny_config();
    cfg.block_style = BlockStyle::fc_residual;
    CHECK(max_gradient_rel_error(cfg, 2025) < 1e-4);
  }

  SUBCASE("relu variant") {
    ModelConfig cfg = tiny_config();
    cfg.block_style = BlockStyle::relu;
    cfg.lambda = 1.0;  // zeroed rows also sit exactly on the kink
    CHECK(max_gradient_rel_error(cfg, 2026, 0.2) < 1e-4);
  }

  SUBCASE("no dct variant") {
    ModelConfig cfg = tiny_config();
    cfg.use_dct = false;
    CHECK(max_gradient_rel_error(cfg, 2027) < 1e-4);
  }

  SUBCASE("absolute output variant") {
    ModelConfig cfg = tiny_config();
    cfg.output_mode = OutputMode::absolute;
    CHECK(max_gradient_rel_error(cfg, 2028) < 1e-4);
  }

  SUBCASE("lambda 1 and deeper stack") {
    ModelConfig cfg = tiny_config();
    cfg.lambda = 1.0;
    cfg.n_s = 2;
    cfg.n_t = 3;
    CHECK(max_gradient_rel_error(cfg, 2029) < 1e-4);
  }
}

TEST_CASE("gradient is zero at an exact fit") {
  ModelConfig cfg = tiny_config();
  const FsgnParams p = init_params(cfg, 5);
  Rng rng(127);
  const Matrix x = random_matrix(10, 6, rng, 50.0);
  const Matrix target = forward(p, cfg, x);  // fit by construction

  const BackwardResult result = backward(p, cfg, x, target);
  CHECK(result.loss.total == 0.0);
  for (const TensorView& t : tensor_order(const_cast<Gradients&>(result.grad))) {
    for (std::size_t j = 0; j < t.count; ++j) CHECK(t.data[j] == 0.0);
  }
}

TEST_CASE("gradient is linear in the loss coefficients") {
  ModelConfig cfg = tiny_config();
  const FsgnParams p = init_params(cfg, 6);
  Rng rng(131);
  const Matrix x = random_matrix(10, 6, rng, 50.0);
  const Matrix target = random_matrix(4, 6, rng, 50.0);

  auto grad_with_alpha_v = [&](double av) {
    ModelConfig c = cfg;
    c.alpha_v = av;
    c.alpha_a = 0.0;
    return backward(p, c, x, target);
  };
  const BackwardResult g0 = grad_with_alpha_v(0.0);
  const BackwardResult g1 = grad_with_alpha_v(1.0);
  const BackwardResult g2 = grad_with_alpha_v(2.0);

  auto t0 = tensor_order(const_cast<Gradients&>(g0.grad));
  auto t1 = tensor_order(const_cast<Gradients&>(g1.grad));
  auto t2 = tensor_order(const_cast<Gradients&>(g2.grad));
  for (std::size_t i = 0; i < t0.size(); ++i) {
    for (std::size_t j = 0; j < t0[i].count; ++j) {
      const double lhs = t2[i].data[j] - t0[i].data[j];
      const double rhs = 2.0 * (t1[i].data[j] - t0[i].data[j]);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
}

TEST_CASE("backward rejects non-finite values") {
  ModelConfig cfg = tiny_config();
  FsgnParams p = init_params(cfg, 7);
  p.spatial_enc[0].w(0, 0) = std::numeric_limits<double>::infinity();
  Rng rng(137);
  const Matrix x = random_matrix(10, 6, rng);
  const Matrix target = random_matrix(4, 6, rng);
  CHECK_THROWS_AS(backward(p, cfg, x, target), NumericError);
}

TEST_CASE("adam") {
  ModelConfig cfg = tiny_config();

  SUBCASE("zero gradient leaves parameters unchanged") {
    FsgnParams p = init_params(cfg, 8);
    const FsgnParams before = p;
    OptimizerState state = make_optimizer_state(cfg);
    adam_step(p, zeros_like(cfg), state, 0.01);
    auto ta = tensor_order(p);
    auto tb = tensor_order(const_cast<FsgnParams&>(before));
    for (std::size_t i = 0; i < ta.size(); ++i) {
      for (std::size_t j = 0; j < ta[i].count; ++j) CHECK(ta[i].data[j] == tb[i].data[j]);
    }
  }

  SUBCASE("first step with constant gradient moves by about lr") {
    // bias correction makes m_hat = g and v_hat = g^2 on step one, so the
    // update is lr * g / (|g| + eps) = lr * sign(g)
    FsgnParams p = zeros_like(cfg);
    Gradients g = zeros_like(cfg);
    const double c = 0.37;
    for (TensorView& t : tensor_order(g)) {
      for (std::size_t j = 0; j < t.count; ++j) t.data[j] = c;
    }
    OptimizerState state = make_optimizer_state(cfg);
    const double lr = 1e-3;
    adam_step(p, g, state, lr);
    for (const TensorView& t : tensor_order(p)) {
      for (std::size_t j = 0; j < t.count; ++j) {
        CHECK(t.data[j] == doctest::Approx(-lr).epsilon(1e-6));
      }
    }
  }

  SUBCASE("identical calls from identical state give identical results") {
    FsgnParams p1 = init_params(cfg, 9);
    FsgnParams p2 = init_params(cfg, 9);
    Gradients g = init_params(cfg, 10);  // arbitrary deterministic values
    OptimizerState s1 = make_optimizer_state(cfg);
    OptimizerState s2 = make_optimizer_state(cfg);
    adam_step(p1, g, s1, 3e-4);
    adam_step(p2, g, s2, 3e-4);
    auto t1 = tensor_order(p1);
    auto t2 = tensor_order(p2);
    for (std::size_t i = 0; i < t1.size(); ++i) {
      for (std::size_t j = 0; j < t1[i].count; ++j) CHECK(t1[i].data[j] == t2[i].data[j]);
    }
  }
}

TEST_CASE("train runs epochs * ceil(n/batch) steps and shrinks the loss") {
  ModelConfig cfg = tiny_config();
  Rng rng(139);

  // a learnable task: the future is always the last observed frame repeated,
  // so the optimum is a zero-displacement output
  std::vector<WindowSample> dataset;
  for (int i = 0; i < 10; ++i) {
    WindowSample w;
    w.observed = random_matrix(static_cast<std::size_t>(cfg.t_in), 6, rng, 100.0);
    w.future = Matrix(static_cast<std::size_t>(cfg.t_out), 6);
    for (std::size_t r = 0; r < w.future.rows(); ++r) {
      for (std::size_t c = 0; c < 6; ++c) {
        w.future(r, c) = w.observed(static_cast<std::size_t>(cfg.t_in) - 1, c);
      }
    }
    dataset.push_back(std::move(w));
  }

  TrainConfig tc;
  tc.epochs = 150;
  tc.batch_size = 4;
  tc.learning_rate = 3e-2;
  tc.seed = 21;

  const TrainResult result = train(dataset, cfg, tc);
  CHECK(result.curve.size() == 150u * 3u);  // ceil(10/4) = 3 steps per epoch
  CHECK(result.curve.front().epoch == 1);
  CHECK(result.curve.back().epoch == 150);
  CHECK(result.curve.back().step == 450);

  // averaged over the last epoch to smooth batch noise
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 3; ++i) {
    first += result.curve[static_cast<std::size_t>(i)].loss.total;
    last += result.curve[result.curve.size() - 1 - static_cast<std::size_t>(i)].loss.total;
  }
  CHECK(last < 0.3 * first);
}

TEST_CASE("train is deterministic for a fixed seed and any worker count") {
  ModelConfig cfg = tiny_config();
  Rng rng(149);
  std::vector<WindowSample> dataset;
  for (int i = 0; i < 40; ++i) {
    WindowSample w;
    w.observed = random_matrix(static_cast<std::size_t>(cfg.t_in), 6, rng, 10.0);
    w.future = random_matrix(static_cast<std::size_t>(cfg.t_out), 6, rng, 10.0);
    dataset.push_back(std::move(w));
  }
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 33;  // exercises a ragged final chunk
  tc.seed = 77;

  set_worker_count(1);
  const TrainResult a = train(dataset, cfg, tc);
  set_worker_count(4);
  const TrainResult b = train(dataset, cfg, tc);
  set_worker_count(0);

  auto ta = tensor_order(const_cast<FsgnParams&>(a.params));
  auto tb = tensor_order(const_cast<FsgnParams&>(b.params));
  for (std::size_t i = 0; i < ta.size(); ++i) {
    for (std::size_t j = 0; j < ta[i].count; ++j) CHECK(ta[i].data[j] == tb[i].data[j]);
  }
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].loss.total == b.curve[i].loss.total);
  }
}

TEST_CASE("train rejects an empty dataset") {
  CHECK_THROWS_AS(train({}, tiny_config(), TrainConfig{}), DataError);
}

TEST_CASE("a numeric failure inside a worker thread propagates") {
  ModelConfig cfg = tiny_config();
  Rng rng(157);
  std::vector<WindowSample> dataset;
  for (int i = 0; i < 48; ++i) {
    WindowSample w;
    w.observed = random_matrix(static_cast<std::size_t>(cfg.t_in), 6, rng, 10.0);
    w.future = random_matrix(static_cast<std::size_t>(cfg.t_out), 6, rng, 10.0);
    dataset.push_back(std::move(w));
  }
  dataset[37].observed(0, 0) = std::numeric_limits<double>::quiet_NaN();

  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 48;
  tc.seed = 3;
  set_worker_count(4);
  CHECK_THROWS_AS(train(dataset, cfg, tc), NumericError);
  set_worker_count(0);
}

TEST_CASE("gradient clipping changes the trajectory and keeps it finite") {
  ModelConfig cfg = tiny_config();
  Rng rng(151);
  std::vector<WindowSample> dataset;
  for (int i = 0; i < 6; ++i) {
    WindowSample w;
    w.observed = random_matrix(static_cast<std::size_t>(cfg.t_in), 6, rng, 100.0);
    w.future = random_matrix(static_cast<std::size_t>(cfg.t_out), 6, rng, 100.0);
    dataset.push_back(std::move(w));
  }
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 3;
  tc.seed = 1;

  const TrainResult plain = train(dataset, cfg, tc);
  tc.grad_clip = 1e-3;  // far below the natural gradient norm
  const TrainResult clipped = train(dataset, cfg, tc);

  for (const LossCurvePoint& pt : clipped.curve) CHECK(std::isfinite(pt.loss.total));
  double diff = 0.0;
  auto ta = tensor_order(const_cast<FsgnParams&>(plain.params));
  auto tb = tensor_order(const_cast<FsgnParams&>(clipped.params));
  for (std::size_t i = 0; i < ta.size(); ++i) {
    for (std::size_t j = 0; j < ta[i].count; ++j) {
      diff = std::max(diff, std::abs(ta[i].data[j] - tb[i].data[j]));
    }
  }
  CHECK(diff > 0.0);
}

TEST_CASE("loss curve csv has the documented header and one row per step") {
  const auto path = (std::filesystem::temp_directory_path() / "fsgn_curve_test.csv").string();
  std::vector<LossCurvePoint> curve{{1, 1, {4.0, 3.0, 0.5, 0.5}}, {2, 1, {2.0, 1.0, 0.5, 0.5}}};
  write_loss_curve_csv(path, curve);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "step,epoch,loss_total,loss_p,loss_v,loss_a");
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 2);
  std::filesystem::remove(path);
}
