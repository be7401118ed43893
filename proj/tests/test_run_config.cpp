#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "errors.hpp"
#include "run_config.hpp"
#include "runner.hpp"

using namespace fsgn;

TEST_CASE("an empty config yields the documented defaults") {
  const RunConfig cfg = parse_run_config("{}");
  CHECK(cfg.model.k == 66);
  CHECK(cfg.model.t_in == 50);
  CHECK(cfg.model.t_out == 10);
  CHECK(cfg.model.lambda == 0.8);
  CHECK(cfg.model.n_s == 1);
  CHECK(cfg.model.n_t == 20);
  CHECK(cfg.model.alpha_v == 1.0);
  CHECK(cfg.model.alpha_a == 1.0);
  CHECK(cfg.model.use_dct);
  CHECK(cfg.model.output_mode == OutputMode::displacement);
  CHECK(cfg.train.epochs == 80);
  CHECK(cfg.train.batch_size == 256);
  CHECK(cfg.train.learning_rate == 3e-4);
  CHECK(cfg.eval.horizons_ms == std::vector<int>{80, 160, 320, 400, 560, 720, 880, 1000});
  CHECK(cfg.eval.sample_cap == 256);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"modle": {}})"), doctest::Contains("modle"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"model": {"t_inn": 5}})"),
                       doctest::Contains("t_inn"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"train": {"lr": 0.1}})"), doctest::Contains("lr"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"data": {"synth": {"amp": 3}}})"),
                       doctest::Contains("amp"), ConfigError);
}

TEST_CASE("invalid values are config errors") {
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"lambda": 0.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"t_in": 10, "t_out": 20}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"k": 7}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"n_s": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"epochs": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"eval": {"horizons_ms": [400, 100]}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
}

TEST_CASE("synth and ablate sections parse") {
  const RunConfig cfg = parse_run_config(R"({
    "model": {"k": 24, "t_in": 30},
    "data": {"synth": {"joints": 8, "frames": 200, "train_count": 16, "test_count": 4,
                       "seed": 11, "freq_max": 2.5}},
    "ablate": {"axis": "lambda", "grid": [0.8, 0.2]}
  })");
  REQUIRE(cfg.data.synth.has_value());
  CHECK(cfg.data.synth->spec.joints == 8);
  CHECK(cfg.data.synth->spec.frames == 200);
  CHECK(cfg.data.synth->spec.freq_max == 2.5);
  CHECK(cfg.data.synth->seed == 11);
  REQUIRE(cfg.ablate.has_value());
  CHECK(cfg.ablate->axis == "lambda");
  REQUIRE(cfg.ablate->numeric_grid.size() == 2);
  CHECK(cfg.ablate->numeric_grid[0][0] == 0.8);

  CHECK_THROWS_AS(parse_run_config(R"({"ablate": {"grid": [0.8, "no_dct"]}})"), ConfigError);
}

TEST_CASE("load_run_config names the missing path") {
  CHECK_THROWS_WITH_AS(load_run_config("/nonexistent/cfg.json"),
                       doctest::Contains("/nonexistent/cfg.json"), ConfigError);
}

TEST_CASE("synthetic corpus generation is seed-deterministic") {
  const RunConfig cfg = parse_run_config(R"({
    "model": {"k": 6},
    "data": {"synth": {"joints": 2, "frames": 30, "train_count": 2, "test_count": 1,
                       "seed": 5}}
  })");
  const Corpus a = load_corpus(cfg);
  const Corpus b = load_corpus(cfg);
  REQUIRE(a.train.size() == 2);
  REQUIRE(a.test.size() == 1);
  CHECK(max_abs_diff(a.train[0].frames, b.train[0].frames) == 0.0);
  CHECK(max_abs_diff(a.test[0].frames, b.test[0].frames) == 0.0);
  CHECK(max_abs_diff(a.train[0].frames, a.train[1].frames) > 0.0);
}

TEST_CASE("expand_glob matches wildcards within a file name") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fsgn_glob_test";
  fs::create_directories(dir);
  std::ofstream(dir / "walk_01.txt") << "x";
  std::ofstream(dir / "walk_02.txt") << "x";
  std::ofstream(dir / "sit_01.txt") << "x";

  const auto walks = expand_glob((dir / "walk_*.txt").string());
  CHECK(walks.size() == 2);
  const auto all = expand_glob((dir / "*.txt").string());
  CHECK(all.size() == 3);
  CHECK(std::is_sorted(all.begin(), all.end()));
  const auto exact = expand_glob((dir / "sit_01.txt").string());
  CHECK(exact.size() == 1);
  CHECK(expand_glob((dir / "missing_*.txt").string()).empty());

  fs::remove_all(dir);
}
