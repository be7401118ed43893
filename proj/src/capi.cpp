#include "fsgn/fsgn.h"

#include <cstring>
#include <string>

#include "data_io.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "model.hpp"
#include "run_config.hpp"
#include "runner.hpp"
#include "sequence_control.hpp"
#include "training.hpp"

struct fsgn_sequence {
  fsgn::SkeletonSequence seq;
};

struct fsgn_model {
  fsgn::Checkpoint ckpt;
};

namespace {

thread_local std::string t_last_error;

fsgn_status fail(fsgn_status status, const std::string& message) {
  t_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
fsgn_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return FSGN_OK;
  } catch (const fsgn::Error& e) {
    switch (e.kind()) {
      case fsgn::ErrorKind::config: return fail(FSGN_ERROR_CONFIG, e.what());
      case fsgn::ErrorKind::data: return fail(FSGN_ERROR_DATA, e.what());
      case fsgn::ErrorKind::numeric: return fail(FSGN_ERROR_NUMERIC, e.what());
      case fsgn::ErrorKind::invalid_argument: break;
    }
    return fail(FSGN_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, e.what());
  }
}

fsgn::RunConfig config_from(const char* config_json) {
  if (config_json == nullptr || config_json[0] == '\0') {
    fsgn::RunConfig cfg;
    cfg.model.validate();
    return cfg;
  }
  return fsgn::parse_run_config(config_json);
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* fsgn_version(void) { return "0.1.0"; }

const char* fsgn_last_error(void) { return t_last_error.c_str(); }

const char* fsgn_status_name(fsgn_status status) {
  switch (status) {
    case FSGN_OK: return "ok";
    case FSGN_ERROR_INVALID_ARGUMENT: return "invalid_argument";
    case FSGN_ERROR_CONFIG: return "config_error";
    case FSGN_ERROR_DATA: return "data_error";
    case FSGN_ERROR_NUMERIC: return "numeric_error";
  }
  return "unknown";
}

void fsgn_set_threads(int32_t n) { fsgn::set_worker_count(n); }

fsgn_status fsgn_sequence_load(const char* path, fsgn_sequence** out) {
  if (path == nullptr || out == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_sequence_load: null argument");
  }
  *out = nullptr;
  return guarded([&] { *out = new fsgn_sequence{fsgn::load_sequence(path)}; });
}

fsgn_status fsgn_sequence_save(const fsgn_sequence* seq, const char* path) {
  if (seq == nullptr || path == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_sequence_save: null argument");
  }
  return guarded([&] { fsgn::save_sequence(seq->seq, path); });
}

void fsgn_sequence_free(fsgn_sequence* seq) { delete seq; }

int64_t fsgn_sequence_frames(const fsgn_sequence* seq) {
  return seq ? static_cast<int64_t>(seq->seq.frames.rows()) : -1;
}

int32_t fsgn_sequence_joints(const fsgn_sequence* seq) { return seq ? seq->seq.joints : -1; }

int32_t fsgn_sequence_fps(const fsgn_sequence* seq) { return seq ? seq->seq.fps : -1; }

fsgn_status fsgn_sequence_values(const fsgn_sequence* seq, double* buffer, int64_t capacity) {
  if (seq == nullptr || buffer == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_sequence_values: null argument");
  }
  const auto needed = static_cast<int64_t>(seq->seq.frames.size());
  if (capacity < needed) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT,
                "fsgn_sequence_values: buffer holds " + std::to_string(capacity) +
                    " doubles, need " + std::to_string(needed));
  }
  std::memcpy(buffer, seq->seq.frames.data(), static_cast<std::size_t>(needed) * sizeof(double));
  t_last_error.clear();
  return FSGN_OK;
}

fsgn_status fsgn_model_load(const char* model_json_path, fsgn_model** out) {
  if (model_json_path == nullptr || out == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_model_load: null argument");
  }
  *out = nullptr;
  return guarded([&] { *out = new fsgn_model{fsgn::load_checkpoint(model_json_path)}; });
}

void fsgn_model_free(fsgn_model* model) { delete model; }

uint64_t fsgn_model_param_count(const fsgn_model* model) {
  return model ? fsgn::param_count(model->ckpt.config) : 0;
}

fsgn_status fsgn_model_predict(const fsgn_model* model, const fsgn_sequence* history,
                               int32_t horizon_frames, fsgn_sequence** out) {
  if (model == nullptr || history == nullptr || out == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_model_predict: null argument");
  }
  if (horizon_frames < 0) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_model_predict: negative horizon");
  }
  *out = nullptr;
  return guarded([&] {
    const fsgn::ModelConfig& cfg = model->ckpt.config;
    if (history->seq.joints * 3 != cfg.k) {
      throw fsgn::DataError("predict: input has " + std::to_string(history->seq.joints) +
                            " joints, model expects " + std::to_string(cfg.k / 3));
    }
    fsgn::SkeletonSequence future;
    future.fps = history->seq.fps;
    future.joints = history->seq.joints;
    future.label = history->seq.label + "_future";
    if (horizon_frames == 0) {
      future.frames = fsgn::Matrix(0, history->seq.frames.cols());
    } else {
      future.frames =
          fsgn::rollout(history->seq.frames, fsgn::make_forward_fn(model->ckpt.params, cfg),
                        cfg.t_out, horizon_frames);
    }
    *out = new fsgn_sequence{std::move(future)};
  });
}

fsgn_status fsgn_param_count(const char* config_json, uint64_t* out) {
  if (out == nullptr) return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_param_count: null output");
  return guarded([&] { *out = fsgn::param_count(config_from(config_json).model); });
}

fsgn_status fsgn_train_run(const char* config_json, const char* out_dir) {
  if (config_json == nullptr || out_dir == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_train_run: null argument");
  }
  return guarded([&] { fsgn::run_train(fsgn::parse_run_config(config_json), out_dir); });
}

fsgn_status fsgn_eval_run(const char* config_json, const char* checkpoint_json_path,
                          const char* csv_path, char** table_out) {
  if (config_json == nullptr || checkpoint_json_path == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_eval_run: null argument");
  }
  return guarded([&] {
    const std::string table =
        fsgn::run_eval(fsgn::parse_run_config(config_json), checkpoint_json_path,
                       csv_path ? csv_path : "");
    if (table_out) *table_out = copy_string(table);
  });
}

fsgn_status fsgn_ablate_run(const char* config_json, const char* axis, const char* csv_path,
                            char** table_out) {
  if (config_json == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_ablate_run: null config");
  }
  return guarded([&] {
    const std::string table = fsgn::run_ablate(fsgn::parse_run_config(config_json),
                                               axis ? axis : "", csv_path ? csv_path : "");
    if (table_out) *table_out = copy_string(table);
  });
}

fsgn_status fsgn_synth_run(const char* config_json, const char* out_dir) {
  if (config_json == nullptr || out_dir == nullptr) {
    return fail(FSGN_ERROR_INVALID_ARGUMENT, "fsgn_synth_run: null argument");
  }
  return guarded([&] { fsgn::run_synth(fsgn::parse_run_config(config_json), out_dir); });
}

void fsgn_string_free(char* s) { delete[] s; }

}  // extern "C"
