#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "errors.hpp"
#include "json.hpp"

namespace fsgn {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& section,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

void parse_model(const json& obj, ModelConfig& cfg) {
  reject_unknown_keys(obj, "model",
                      {"k", "t_in", "t_out", "lambda", "n_s", "n_t", "alpha_v", "alpha_a",
                       "block_style", "use_dct", "output_mode", "pad_mode"});
  read(obj, "k", cfg.k);
  read(obj, "t_in", cfg.t_in);
  read(obj, "t_out", cfg.t_out);
  read(obj, "lambda", cfg.lambda);
  read(obj, "n_s", cfg.n_s);
  read(obj, "n_t", cfg.n_t);
  read(obj, "alpha_v", cfg.alpha_v);
  read(obj, "alpha_a", cfg.alpha_a);
  read(obj, "use_dct", cfg.use_dct);
  if (obj.contains("block_style")) {
    const auto s = obj.at("block_style").get<std::string>();
    if (s == "ln_residual") cfg.block_style = BlockStyle::ln_residual;
    else if (s == "fc_residual") cfg.block_style = BlockStyle::fc_residual;
    else if (s == "relu") cfg.block_style = BlockStyle::relu;
    else throw ConfigError("model.block_style must be ln_residual, fc_residual or relu");
  }
  if (obj.contains("output_mode")) {
    const auto s = obj.at("output_mode").get<std::string>();
    if (s == "displacement") cfg.output_mode = OutputMode::displacement;
    else if (s == "absolute") cfg.output_mode = OutputMode::absolute;
    else throw ConfigError("model.output_mode must be displacement or absolute");
  }
  if (obj.contains("pad_mode")) {
    const auto s = obj.at("pad_mode").get<std::string>();
    if (s == "prepend_first") cfg.pad_mode = PadMode::prepend_first;
    else if (s == "append_last") cfg.pad_mode = PadMode::append_last;
    else throw ConfigError("model.pad_mode must be prepend_first or append_last");
  }
  cfg.validate();
  // User-facing configs describe trainable models; zero-unit variants exist
  // only as ablation grid points.
  if (cfg.n_s < 1 || cfg.n_t < 1) throw ConfigError("model.n_s and model.n_t must be >= 1");
}

void parse_train(const json& obj, TrainConfig& cfg) {
  reject_unknown_keys(obj, "train",
                      {"epochs", "batch_size", "learning_rate", "lr_decay", "lr_decay_every",
                       "seed", "grad_clip"});
  read(obj, "epochs", cfg.epochs);
  read(obj, "batch_size", cfg.batch_size);
  read(obj, "learning_rate", cfg.learning_rate);
  read(obj, "lr_decay", cfg.lr_decay);
  read(obj, "lr_decay_every", cfg.lr_decay_every);
  read(obj, "seed", cfg.seed);
  read(obj, "grad_clip", cfg.grad_clip);
  cfg.validate();
}

void parse_synth(const json& obj, SynthCorpusConfig& cfg) {
  reject_unknown_keys(obj, "data.synth",
                      {"train_count", "test_count", "seed", "joints", "fps", "frames",
                       "n_harmonics", "amp_min", "amp_max", "freq_min", "freq_max",
                       "offset_min", "offset_max"});
  read(obj, "train_count", cfg.train_count);
  read(obj, "test_count", cfg.test_count);
  read(obj, "seed", cfg.seed);
  read(obj, "joints", cfg.spec.joints);
  read(obj, "fps", cfg.spec.fps);
  read(obj, "frames", cfg.spec.frames);
  read(obj, "n_harmonics", cfg.spec.n_harmonics);
  read(obj, "amp_min", cfg.spec.amp_min);
  read(obj, "amp_max", cfg.spec.amp_max);
  read(obj, "freq_min", cfg.spec.freq_min);
  read(obj, "freq_max", cfg.spec.freq_max);
  read(obj, "offset_min", cfg.spec.offset_min);
  read(obj, "offset_max", cfg.spec.offset_max);
  if (cfg.train_count < 0 || cfg.test_count < 0 || cfg.train_count + cfg.test_count < 1) {
    throw ConfigError("data.synth: train_count + test_count must be >= 1");
  }
  if (cfg.spec.joints < 1 || cfg.spec.fps < 1 || cfg.spec.frames < 1 ||
      cfg.spec.n_harmonics < 0) {
    throw ConfigError("data.synth: joints/fps/frames must be >= 1, n_harmonics >= 0");
  }
}

void parse_data(const json& obj, DataConfig& cfg) {
  reject_unknown_keys(obj, "data",
                      {"train_paths", "test_paths", "joint_indices", "fps", "stride",
                       "label_blacklist", "synth"});
  read(obj, "train_paths", cfg.train_paths);
  read(obj, "test_paths", cfg.test_paths);
  read(obj, "joint_indices", cfg.joint_indices);
  read(obj, "fps", cfg.fps);
  read(obj, "stride", cfg.stride);
  read(obj, "label_blacklist", cfg.label_blacklist);
  if (obj.contains("synth")) {
    SynthCorpusConfig synth;
    parse_synth(obj.at("synth"), synth);
    cfg.synth = synth;
  }
  if (cfg.fps < 1) throw ConfigError("data.fps must be >= 1");
  if (cfg.stride < 1) throw ConfigError("data.stride must be >= 1");
  for (int idx : cfg.joint_indices) {
    if (idx < 0) throw ConfigError("data.joint_indices entries must be >= 0");
  }
}

void parse_eval(const json& obj, EvalSettings& cfg) {
  reject_unknown_keys(obj, "eval", {"horizons_ms", "sample_cap", "seed", "horizon_mode"});
  read(obj, "horizons_ms", cfg.horizons_ms);
  read(obj, "sample_cap", cfg.sample_cap);
  read(obj, "seed", cfg.seed);
  if (obj.contains("horizon_mode")) {
    const auto s = obj.at("horizon_mode").get<std::string>();
    if (s == "cumulative") cfg.mode = HorizonMode::cumulative;
    else if (s == "at_frame") cfg.mode = HorizonMode::at_frame;
    else throw ConfigError("eval.horizon_mode must be cumulative or at_frame");
  }
  if (cfg.horizons_ms.empty()) throw ConfigError("eval.horizons_ms must not be empty");
  for (std::size_t i = 0; i < cfg.horizons_ms.size(); ++i) {
    if (cfg.horizons_ms[i] < 1 || (i > 0 && cfg.horizons_ms[i] <= cfg.horizons_ms[i - 1])) {
      throw ConfigError("eval.horizons_ms must be positive and strictly increasing");
    }
  }
}

void parse_ablate(const json& obj, AblateSettings& cfg) {
  reject_unknown_keys(obj, "ablate", {"axis", "grid"});
  read(obj, "axis", cfg.axis);
  if (obj.contains("grid")) {
    const json& grid = obj.at("grid");
    if (!grid.is_array()) throw ConfigError("ablate.grid must be an array");
    for (const json& entry : grid) {
      if (entry.is_string()) {
        cfg.name_grid.push_back(entry.get<std::string>());
      } else if (entry.is_number()) {
        cfg.numeric_grid.push_back({entry.get<double>()});
      } else if (entry.is_array()) {
        std::vector<double> row;
        for (const json& v : entry) {
          if (!v.is_number()) throw ConfigError("ablate.grid pairs must be numeric");
          row.push_back(v.get<double>());
        }
        cfg.numeric_grid.push_back(std::move(row));
      } else {
        throw ConfigError("ablate.grid entries must be numbers, pairs or names");
      }
    }
    if (!cfg.name_grid.empty() && !cfg.numeric_grid.empty()) {
      throw ConfigError("ablate.grid cannot mix names and numbers");
    }
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(doc, "(root)", {"model", "train", "data", "eval", "ablate"});

  RunConfig cfg;
  if (doc.contains("model")) parse_model(doc.at("model"), cfg.model);
  else cfg.model.validate();
  if (doc.contains("train")) parse_train(doc.at("train"), cfg.train);
  if (doc.contains("data")) parse_data(doc.at("data"), cfg.data);
  if (doc.contains("eval")) parse_eval(doc.at("eval"), cfg.eval);
  if (doc.contains("ablate")) {
    AblateSettings ablate;
    parse_ablate(doc.at("ablate"), ablate);
    cfg.ablate = ablate;
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_run_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace fsgn
