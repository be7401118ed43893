// fsgn command line tool. Everything heavier than argument handling goes
// through the C API in fsgn/fsgn.h.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fsgn/fsgn.h"
#include "json.hpp"

namespace {

int exit_code_for(fsgn_status status) {
  switch (status) {
    case FSGN_OK: return 0;
    case FSGN_ERROR_INVALID_ARGUMENT: return 2;
    case FSGN_ERROR_CONFIG: return 2;
    case FSGN_ERROR_DATA: return 3;
    case FSGN_ERROR_NUMERIC: return 4;
  }
  return 2;
}

int report(fsgn_status status) {
  if (status == FSGN_OK) return 0;
  std::cerr << "fsgn: " << fsgn_status_name(status) << ": " << fsgn_last_error() << "\n";
  return exit_code_for(status);
}

struct GlobalOpts {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::string out_dir = ".";
  int threads = 0;
};

// Reads the config file; a missing or unreadable file is a usage error that
// must name the path.
bool read_config(const std::string& path, std::string& text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "fsgn: config_error: cannot open config file " << path << "\n";
    return false;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  text = buf.str();
  return true;
}

// Applies --seed on top of the config text. Invalid JSON is passed through
// untouched so the library reports the parse error.
std::string override_seed(const std::string& text, std::int64_t seed, bool synth_seed) {
  try {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (synth_seed) {
      if (doc.contains("data") && doc["data"].contains("synth")) {
        doc["data"]["synth"]["seed"] = seed;
      }
    } else {
      doc["train"]["seed"] = seed;
    }
    return doc.dump();
  } catch (const nlohmann::json::exception&) {
    return text;
  }
}

bool load_config_text(const GlobalOpts& opts, bool synth_seed, std::string& text) {
  if (!read_config(opts.config_path, text)) return false;
  if (opts.seed) text = override_seed(text, *opts.seed, synth_seed);
  return true;
}

void add_global_flags(CLI::App* cmd, GlobalOpts& opts, bool config_required = true) {
  auto* config = cmd->add_option("--config", opts.config_path,
                                 "JSON run configuration (model defaults: t_in=50 t_out=10 "
                                 "lambda=0.8 n_s=1 n_t=20 alpha_v=1 alpha_a=1 k=66)");
  if (config_required) config->required();
  cmd->add_option("--seed", opts.seed, "override the configured seed");
  cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--threads", opts.threads, "worker threads, 0 = auto")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skeleton-sequence forecasting: train, evaluate and run a lightweight "
               "spatio-temporal encoder-decoder"};
  app.require_subcommand(1);

  GlobalOpts opts;

  auto* train = app.add_subcommand("train", "train a model; writes model.json, model.bin and "
                                            "loss_curve.csv to --out");
  add_global_flags(train, opts);

  auto* predict = app.add_subcommand("predict", "forecast a sequence file with a checkpoint");
  std::string checkpoint_path, input_path, out_file = "prediction.txt";
  int horizon_ms = 1000;
  predict->add_option("--checkpoint", checkpoint_path, "model.json path")->required();
  predict->add_option("--input", input_path, "input sequence file")->required();
  predict->add_option("--horizon-ms", horizon_ms, "forecast span in milliseconds")
      ->capture_default_str();
  predict->add_option("--out-file", out_file, "output sequence file (relative to --out)")
      ->capture_default_str();
  add_global_flags(predict, opts, /*config_required=*/false);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against the zero-velocity and "
                                          "constant-velocity baselines");
  eval->add_option("--checkpoint", checkpoint_path, "model.json path")->required();
  add_global_flags(eval, opts);

  auto* ablate = app.add_subcommand("ablate", "train and evaluate every point of one ablation "
                                              "axis");
  std::string axis;
  ablate->add_option("--axis", axis,
                     "one of: t_in_t_out, n_s_n_t, alpha, components, lambda, displacement");
  add_global_flags(ablate, opts);

  auto* param_count = app.add_subcommand("param-count", "print the learnable-parameter count");
  add_global_flags(param_count, opts, /*config_required=*/false);

  auto* synth = app.add_subcommand("synth", "write the configured synthetic corpus as sequence "
                                            "files");
  add_global_flags(synth, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  fsgn_set_threads(opts.threads);

  if (train->parsed()) {
    std::string config;
    if (!load_config_text(opts, false, config)) return 2;
    const int rc = report(fsgn_train_run(config.c_str(), opts.out_dir.c_str()));
    if (rc == 0) {
      std::cout << "wrote " << opts.out_dir << "/model.json, model.bin, loss_curve.csv\n";
    }
    return rc;
  }

  if (predict->parsed()) {
    fsgn_model* model = nullptr;
    fsgn_status status = fsgn_model_load(checkpoint_path.c_str(), &model);
    if (status != FSGN_OK) return report(status);

    fsgn_sequence* input = nullptr;
    status = fsgn_sequence_load(input_path.c_str(), &input);
    if (status != FSGN_OK) {
      fsgn_model_free(model);
      return report(status);
    }

    const int fps = fsgn_sequence_fps(input);
    const auto frames =
        static_cast<int32_t>(std::llround(static_cast<double>(horizon_ms) * fps / 1000.0));

    fsgn_sequence* future = nullptr;
    status = fsgn_model_predict(model, input, frames, &future);
    if (status == FSGN_OK) {
      const auto path = (std::filesystem::path(opts.out_dir) / out_file).string();
      std::error_code ec;
      std::filesystem::create_directories(opts.out_dir, ec);
      status = fsgn_sequence_save(future, path.c_str());
      if (status == FSGN_OK) {
        std::cout << "wrote " << path << " (" << frames << " frames at " << fps << " fps)\n";
      }
    }
    fsgn_sequence_free(future);
    fsgn_sequence_free(input);
    fsgn_model_free(model);
    return report(status);
  }

  if (eval->parsed()) {
    std::string config;
    if (!load_config_text(opts, false, config)) return 2;
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    const auto csv = (std::filesystem::path(opts.out_dir) / "report.csv").string();
    char* table = nullptr;
    const fsgn_status status =
        fsgn_eval_run(config.c_str(), checkpoint_path.c_str(), csv.c_str(), &table);
    if (status == FSGN_OK && table) {
      std::cout << table;
      std::cout << "wrote " << csv << "\n";
    }
    fsgn_string_free(table);
    return report(status);
  }

  if (ablate->parsed()) {
    std::string config;
    if (!load_config_text(opts, false, config)) return 2;
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    std::string csv_name = "ablation";
    if (!axis.empty()) csv_name += "_" + axis;
    const auto csv = (std::filesystem::path(opts.out_dir) / (csv_name + ".csv")).string();
    char* table = nullptr;
    const fsgn_status status = fsgn_ablate_run(config.c_str(), axis.empty() ? nullptr : axis.c_str(),
                                               csv.c_str(), &table);
    if (status == FSGN_OK && table) {
      std::cout << table;
      std::cout << "wrote " << csv << "\n";
    }
    fsgn_string_free(table);
    return report(status);
  }

  if (param_count->parsed()) {
    std::string config;
    if (!opts.config_path.empty() && !read_config(opts.config_path, config)) return 2;
    uint64_t count = 0;
    const fsgn_status status = fsgn_param_count(config.c_str(), &count);
    if (status == FSGN_OK) {
      std::printf("%llu (%.2fM)\n", static_cast<unsigned long long>(count),
                  static_cast<double>(count) / 1e6);
    }
    return report(status);
  }

  if (synth->parsed()) {
    std::string config;
    if (!load_config_text(opts, true, config)) return 2;
    const int rc = report(fsgn_synth_run(config.c_str(), opts.out_dir.c_str()));
    if (rc == 0) std::cout << "wrote synthetic sequences to " << opts.out_dir << "\n";
    return rc;
  }

  return 2;
}
