#include "doctest.h"
#include "errors.hpp"
#include "matrix.hpp"
#include "rng.hpp"
#include "sequence_control.hpp"

using namespace fsgn;

namespace {

Matrix numbered(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = static_cast<double>(r * 1000 + c);
  }
  return m;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-10.0, 10.0);
  return m;
}

}  // namespace

TEST_CASE("time control keeps the last t_in rows") {
  const Matrix x = numbered(60, 2);
  const Matrix out = time_control_in(x, 50);
  REQUIRE(out.rows() == 50);
  CHECK(out(0, 0) == x(10, 0));
  CHECK(out(49, 1) == x(59, 1));
}

TEST_CASE("time control is the identity at the boundary") {
  const Matrix x = numbered(50, 3);
  CHECK(time_control_in(x, 50) == x);
}

TEST_CASE("time control pads short sequences with the first frame") {
  const Matrix x = numbered(40, 2);
  const Matrix out = time_control_in(x, 50);
  REQUIRE(out.rows() == 50);
  for (std::size_t r = 0; r < 10; ++r) {
    CHECK(out(r, 0) == x(0, 0));
    CHECK(out(r, 1) == x(0, 1));
  }
  CHECK(out(10, 0) == x(0, 0));
  CHECK(out(49, 0) == x(39, 0));
}

TEST_CASE("time control append_last mode pads with the last frame") {
  const Matrix x = numbered(4, 1);
  const Matrix out = time_control_in(x, 6, PadMode::append_last);
  REQUIRE(out.rows() == 6);
  CHECK(out(0, 0) == x(0, 0));
  CHECK(out(3, 0) == x(3, 0));
  CHECK(out(4, 0) == x(3, 0));
  CHECK(out(5, 0) == x(3, 0));
}

TEST_CASE("time control output always has t_in rows") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t t = 1 + rng.below(80);
    const Matrix x = random_matrix(t, 3, rng);
    CHECK(time_control_in(x, 25).rows() == 25);
  }
}

TEST_CASE("time control rejects an empty sequence") {
  const Matrix empty(0, 3);
  CHECK_THROWS_AS(time_control_in(empty, 10), Error);
}

TEST_CASE("lowpass keeps floor(lambda T) rows") {
  const Matrix c = numbered(50, 2);
  const Matrix out = lowpass(c, 0.8);
  REQUIRE(out.rows() == 50);
  for (std::size_t r = 0; r < 40; ++r) CHECK(out(r, 0) == c(r, 0));
  for (std::size_t r = 40; r < 50; ++r) CHECK(out(r, 0) == 0.0);

  CHECK(lowpass_cutoff(25, 0.2) == 5);
  CHECK(lowpass_cutoff(50, 0.6) == 30);
  CHECK(lowpass_cutoff(50, 1.0) == 50);
}

TEST_CASE("lowpass with lambda 1 is the identity") {
  Rng rng(23);
  const Matrix c = random_matrix(13, 4, rng);
  CHECK(lowpass(c, 1.0) == c);
}

TEST_CASE("lowpass is idempotent") {
  Rng rng(29);
  const Matrix c = random_matrix(25, 3, rng);
  const Matrix once = lowpass(c, 0.37);
  CHECK(lowpass(once, 0.37) == once);
}

TEST_CASE("lowpass rejects lambda outside (0, 1]") {
  const Matrix c(4, 1);
  CHECK_THROWS_AS(lowpass(c, 0.0), Error);
  CHECK_THROWS_AS(lowpass(c, 1.5), Error);
  CHECK_THROWS_AS(lowpass(c, -0.2), Error);
}

TEST_CASE("input pipeline composes the three stages") {
  Rng rng(31);
  const Matrix x = random_matrix(60, 6, rng);
  const ControlConfig cfg{50, 10, 0.8, PadMode::prepend_first};
  const Matrix direct = input_pipeline(x, cfg);
  const Matrix composed = lowpass(dct(time_control_in(x, cfg.t_in)), cfg.lambda);
  CHECK(max_abs_diff(direct, composed) == 0.0);
}

TEST_CASE("input pipeline with identity controls is plain dct") {
  Rng rng(37);
  const Matrix x = random_matrix(20, 3, rng);
  const ControlConfig cfg{20, 10, 1.0, PadMode::prepend_first};
  CHECK(max_abs_diff(input_pipeline(x, cfg), dct(x)) == 0.0);
}

TEST_CASE("input pipeline of zeros is zeros") {
  const Matrix x(30, 6);
  const ControlConfig cfg{25, 5, 0.8, PadMode::prepend_first};
  const Matrix e0 = input_pipeline(x, cfg);
  for (std::size_t i = 0; i < e0.size(); ++i) CHECK(e0.data()[i] == 0.0);
}

TEST_CASE("output pipeline returns the first t_out reconstructed rows") {
  Rng rng(41);
  const Matrix y = random_matrix(50, 4, rng);
  const Matrix d = dct(y);
  const ControlConfig cfg{50, 10, 1.0, PadMode::prepend_first};
  const Matrix out = output_pipeline(d, cfg);
  REQUIRE(out.rows() == 10);
  REQUIRE(out.cols() == 4);
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(out(r, c) == doctest::Approx(y(r, c)).epsilon(1e-12));
  }
}

TEST_CASE("output pipeline with t_out == t_in reconstructs everything") {
  Rng rng(43);
  const Matrix y = random_matrix(12, 2, rng);
  const ControlConfig cfg{12, 12, 1.0, PadMode::prepend_first};
  CHECK(max_abs_diff(output_pipeline(dct(y), cfg), y) < 1e-9);
}

TEST_CASE("output pipeline rejects t_out beyond the sequence") {
  const Matrix d(10, 2);
  const ControlConfig cfg{10, 11, 1.0, PadMode::prepend_first};
  CHECK_THROWS_AS(output_pipeline(d, cfg), Error);
}

TEST_CASE("lowpass(1) then output control round-trips the window") {
  Rng rng(47);
  const Matrix x = random_matrix(16, 3, rng);
  const ControlConfig cfg{16, 16, 1.0, PadMode::prepend_first};
  const Matrix e0 = input_pipeline(x, cfg);
  CHECK(max_abs_diff(output_pipeline(e0, cfg), x) < 1e-9);
}

TEST_CASE("rollout pass counts and shapes") {
  const std::size_t k = 4;
  int calls = 0;

  auto make_stub = [&calls, k](int t_out) {
    return [&calls, k, t_out](const Matrix& history) {
      ++calls;
      Matrix out(static_cast<std::size_t>(t_out), k);
      for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < k; ++c) {
          out(r, c) = history(history.rows() - 1, c) + static_cast<double>(r + 1);
        }
      }
      return out;
    };
  };

  Matrix history(5, k);
  for (std::size_t c = 0; c < k; ++c) history(4, c) = 10.0 * static_cast<double>(c);

  SUBCASE("t_out=10, H=25 takes exactly 3 passes") {
    calls = 0;
    const Matrix out = rollout(history, make_stub(10), 10, 25);
    CHECK(calls == 3);
    CHECK(out.rows() == 25);
    CHECK(out.cols() == k);
  }

  SUBCASE("t_out=25, H=25 is one-shot") {
    calls = 0;
    const Matrix out = rollout(history, make_stub(25), 25, 25);
    CHECK(calls == 1);
    CHECK(out.rows() == 25);
  }

  SUBCASE("t_out=1, H=3 conditions each pass on the previous output") {
    calls = 0;
    const Matrix out = rollout(history, make_stub(1), 1, 3);
    CHECK(calls == 3);
    REQUIRE(out.rows() == 3);
    // each pass adds 1 to the last frame it saw
    CHECK(out(0, 0) == doctest::Approx(1.0));
    CHECK(out(1, 0) == doctest::Approx(2.0));
    CHECK(out(2, 0) == doctest::Approx(3.0));
  }

  SUBCASE("H <= t_out equals the first H rows of a single pass") {
    calls = 0;
    const Matrix full = make_stub(10)(history);
    calls = 0;
    const Matrix out = rollout(history, make_stub(10), 10, 7);
    CHECK(calls == 1);
    REQUIRE(out.rows() == 7);
    for (std::size_t r = 0; r < 7; ++r) {
      for (std::size_t c = 0; c < k; ++c) CHECK(out(r, c) == full(r, c));
    }
  }
}

TEST_CASE("rollout rejects a zero horizon") {
  const Matrix history(3, 2);
  CHECK_THROWS_AS(rollout(
                      history, [](const Matrix&) { return Matrix(1, 2); }, 1, 0),
                  Error);
}
