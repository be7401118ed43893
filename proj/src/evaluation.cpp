#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"
#include "rng.hpp"
#include "sequence_control.hpp"

namespace fsgn {

int horizon_to_frames(int horizon_ms, int fps) {
  return static_cast<int>(std::llround(static_cast<double>(horizon_ms) * fps / 1000.0));
}

EvalReport evaluate(const std::string& name, const Predictor& predictor,
                    const std::vector<WindowSample>& samples, int fps,
                    const std::vector<int>& horizons_ms, HorizonMode mode,
                    std::uint64_t params_count) {
  if (samples.empty()) throw DataError("evaluate: no samples");
  if (horizons_ms.empty()) throw_invalid("evaluate: no horizons");
  for (std::size_t i = 1; i < horizons_ms.size(); ++i) {
    if (horizons_ms[i] <= horizons_ms[i - 1]) {
      throw_invalid("evaluate: horizons must be strictly increasing");
    }
  }

  std::vector<int> frames(horizons_ms.size());
  for (std::size_t i = 0; i < horizons_ms.size(); ++i) {
    frames[i] = horizon_to_frames(horizons_ms[i], fps);
    if (frames[i] < 1) {
      throw_invalid("evaluate: horizon " + std::to_string(horizons_ms[i]) +
                    " ms rounds to zero frames at " + std::to_string(fps) + " fps");
    }
  }
  const int max_frames = frames.back();
  const int joints = static_cast<int>(samples.front().observed.cols() / 3);

  EvalReport report;
  report.predictor = name;
  report.horizons_ms = horizons_ms;
  report.mpjpe_mm.assign(horizons_ms.size(), 0.0);
  report.n_samples = samples.size();
  report.params_count = params_count;

  for (const WindowSample& sample : samples) {
    if (sample.future.rows() < static_cast<std::size_t>(max_frames)) {
      throw_invalid("evaluate: horizon needs " + std::to_string(max_frames) +
                    " future frames, sample has " + std::to_string(sample.future.rows()));
    }
    const Matrix pred = predictor(sample.observed, max_frames);
    if (pred.rows() < static_cast<std::size_t>(max_frames) ||
        pred.cols() != sample.future.cols()) {
      throw_invalid("evaluate: predictor returned wrong shape");
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const std::size_t h = static_cast<std::size_t>(frames[i]);
      const std::size_t begin = mode == HorizonMode::cumulative ? 0 : h - 1;
      Matrix pred_h(h - begin, pred.cols());
      Matrix true_h(h - begin, pred.cols());
      for (std::size_t r = begin; r < h; ++r) {
        std::copy(pred.row(r).begin(), pred.row(r).end(), pred_h.row(r - begin).begin());
        std::copy(sample.future.row(r).begin(), sample.future.row(r).end(),
                  true_h.row(r - begin).begin());
      }
      report.mpjpe_mm[i] += mpjpe(pred_h, true_h, joints);
    }
  }
  for (double& v : report.mpjpe_mm) v /= static_cast<double>(samples.size());
  return report;
}

std::vector<EvalReport> compare(std::vector<EvalReport> reports) {
  if (reports.empty()) return reports;
  for (const EvalReport& r : reports) {
    if (r.horizons_ms != reports.front().horizons_ms) {
      throw_invalid("compare: reports use different horizon lists");
    }
  }
  std::stable_sort(reports.begin(), reports.end(), [](const EvalReport& a, const EvalReport& b) {
    const double fa = a.mpjpe_mm.back();
    const double fb = b.mpjpe_mm.back();
    if (fa != fb) return fa < fb;
    return a.params_count < b.params_count;
  });
  return reports;
}

std::string render_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  std::size_t name_width = 9;
  for (const EvalReport& r : reports) name_width = std::max(name_width, r.predictor.size());

  char buf[64];
  out << std::string(name_width, ' ') << "  params    ";
  if (!reports.empty()) {
    for (int ms : reports.front().horizons_ms) {
      std::snprintf(buf, sizeof buf, "%8d", ms);
      out << buf;
    }
  }
  out << "  (MPJPE/mm @ ms)\n";
  for (const EvalReport& r : reports) {
    out << r.predictor << std::string(name_width - r.predictor.size(), ' ');
    std::snprintf(buf, sizeof buf, "  %8llu  ", static_cast<unsigned long long>(r.params_count));
    out << buf;
    for (double v : r.mpjpe_mm) {
      std::snprintf(buf, sizeof buf, "%8.1f", v);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report " + path);
  out << "predictor,params,h_ms,mpjpe_mm\n";
  char buf[128];
  for (const EvalReport& r : reports) {
    for (std::size_t i = 0; i < r.horizons_ms.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s,%llu,%d,%.17g\n", r.predictor.c_str(),
                    static_cast<unsigned long long>(r.params_count), r.horizons_ms[i],
                    r.mpjpe_mm[i]);
      out << buf;
    }
  }
  if (!out) throw DataError("short write to " + path);
}

// ---------------------------------------------------------------------------

AblationAxis parse_ablation_axis(const std::string& name) {
  if (name == "t_in_t_out") return AblationAxis::t_in_t_out;
  if (name == "n_s_n_t") return AblationAxis::n_s_n_t;
  if (name == "alpha") return AblationAxis::alpha;
  if (name == "components") return AblationAxis::components;
  if (name == "lambda") return AblationAxis::lambda;
  if (name == "displacement") return AblationAxis::displacement;
  std::string valid;
  for (const std::string& n : ablation_axis_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown ablation axis '" + name + "' (valid: " + valid + ")");
}

std::string ablation_axis_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::t_in_t_out: return "t_in_t_out";
    case AblationAxis::n_s_n_t: return "n_s_n_t";
    case AblationAxis::alpha: return "alpha";
    case AblationAxis::components: return "components";
    case AblationAxis::lambda: return "lambda";
    case AblationAxis::displacement: return "displacement";
  }
  return "?";
}

std::vector<std::string> ablation_axis_names() {
  return {"t_in_t_out", "n_s_n_t", "alpha", "components", "lambda", "displacement"};
}

namespace {

std::string trim_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

GridPoint component_variant(const std::string& name, const ModelConfig& base) {
  GridPoint pt{name, base};
  if (name == "fsgn") return pt;
  if (name == "no_spatial") {
    pt.config.n_s = 0;
  } else if (name == "no_temporal") {
    pt.config.n_t = 0;
  } else if (name == "no_ln") {
    pt.config.block_style = BlockStyle::fc_residual;
  } else if (name == "no_dct") {
    pt.config.use_dct = false;
  } else if (name == "traditional_mlp") {
    pt.config.block_style = BlockStyle::relu;
  } else if (name == "absolute_position") {
    pt.config.output_mode = OutputMode::absolute;
  } else {
    throw ConfigError("unknown component variant '" + name +
                      "' (valid: no_spatial, no_temporal, no_ln, no_dct, traditional_mlp, "
                      "absolute_position, fsgn)");
  }
  return pt;
}

}  // namespace

std::vector<GridPoint> build_ablation_grid(AblationAxis axis, const ModelConfig& base,
                                           const std::vector<std::vector<double>>& numeric_grid,
                                           const std::vector<std::string>& name_grid) {
  std::vector<GridPoint> grid;

  auto pair_grid = [&](const std::vector<std::vector<double>>& defaults, const char* a,
                       const char* b, auto apply) {
    const auto& rows = numeric_grid.empty() ? defaults : numeric_grid;
    for (const auto& row : rows) {
      if (row.size() != 2) {
        throw ConfigError(std::string("ablation axis needs [") + a + ", " + b + "] pairs");
      }
      GridPoint pt{std::string(a) + "=" + trim_number(row[0]) + "," + b + "=" +
                       trim_number(row[1]),
                   base};
      apply(pt.config, row[0], row[1]);
      pt.config.validate();
      grid.push_back(std::move(pt));
    }
  };

  switch (axis) {
    case AblationAxis::t_in_t_out:
      pair_grid({{25, 10}, {50, 10}, {75, 10}, {50, 1}, {50, 25}}, "t_in", "t_out",
                [](ModelConfig& c, double a, double b) {
                  c.t_in = static_cast<int>(a);
                  c.t_out = static_cast<int>(b);
                });
      break;
    case AblationAxis::n_s_n_t:
      pair_grid({{1, 1}, {1, 4}, {1, 16}, {1, 20}, {1, 24}, {1, 28}, {1, 32}, {2, 20}, {4, 20}},
                "n_s", "n_t", [](ModelConfig& c, double a, double b) {
                  c.n_s = static_cast<int>(a);
                  c.n_t = static_cast<int>(b);
                });
      break;
    case AblationAxis::alpha:
      pair_grid({{0, 0}, {0.5, 0}, {1, 0}, {2, 0}, {1, 0.5}, {1, 1}, {1, 2}}, "alpha_v",
                "alpha_a", [](ModelConfig& c, double a, double b) {
                  c.alpha_v = a;
                  c.alpha_a = b;
                });
      break;
    case AblationAxis::lambda: {
      std::vector<double> values;
      if (numeric_grid.empty()) {
        values = {1.0, 0.8, 0.6, 0.4, 0.2};
      } else {
        for (const auto& row : numeric_grid) {
          if (row.size() != 1) throw ConfigError("lambda axis needs scalar grid values");
          values.push_back(row[0]);
        }
      }
      for (double v : values) {
        GridPoint pt{"lambda=" + trim_number(v), base};
        pt.config.lambda = v;
        pt.config.validate();
        grid.push_back(std::move(pt));
      }
      break;
    }
    case AblationAxis::components: {
      std::vector<std::string> names = name_grid;
      if (names.empty()) {
        names = {"no_spatial", "no_temporal", "no_ln", "no_dct", "traditional_mlp",
                 "absolute_position"};
      }
      for (const std::string& n : names) {
        GridPoint pt = component_variant(n, base);
        pt.config.validate();
        grid.push_back(std::move(pt));
      }
      break;
    }
    case AblationAxis::displacement: {
      std::vector<std::string> names = name_grid;
      if (names.empty()) names = {"absolute_position", "relative_displacement"};
      for (const std::string& n : names) {
        GridPoint pt{n, base};
        if (n == "absolute_position") {
          pt.config.output_mode = OutputMode::absolute;
        } else if (n == "relative_displacement") {
          pt.config.output_mode = OutputMode::displacement;
        } else {
          throw ConfigError("displacement axis accepts 'absolute_position' or "
                            "'relative_displacement', got '" + n + "'");
        }
        pt.config.validate();
        grid.push_back(std::move(pt));
      }
      break;
    }
  }

  if (grid.empty()) throw ConfigError("ablation grid is empty");
  return grid;
}

std::vector<WindowSample> cap_samples(std::vector<WindowSample> samples, std::size_t cap,
                                      std::uint64_t seed) {
  if (cap == 0) return samples;
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < samples.size(); ++i) by_label[samples[i].label].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& [label, indices] : by_label) {
    rng.shuffle(indices);
    const std::size_t take = std::min(cap, indices.size());
    keep.insert(keep.end(), indices.begin(), indices.begin() + take);
  }
  std::sort(keep.begin(), keep.end());

  std::vector<WindowSample> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(std::move(samples[i]));
  return out;
}

std::vector<WindowSample> eval_windows(const std::vector<SkeletonSequence>& seqs,
                                       const ModelConfig& cfg, int fps,
                                       const std::vector<int>& horizons_ms, int stride) {
  int max_frames = 0;
  for (int ms : horizons_ms) max_frames = std::max(max_frames, horizon_to_frames(ms, fps));
  std::vector<WindowSample> windows;
  for (const SkeletonSequence& seq : seqs) {
    auto w = make_windows(seq, cfg.t_in, max_frames, stride);
    windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                   std::make_move_iterator(w.end()));
  }
  return windows;
}

Predictor model_predictor(const FsgnParams& params, const ModelConfig& cfg) {
  return [&params, cfg](const Matrix& observed, int horizon_frames) {
    return rollout(
        observed, [&params, &cfg](const Matrix& history) { return forward(params, cfg, history); },
        cfg.t_out, horizon_frames);
  };
}

std::vector<EvalReport> run_ablation(const AblationJob& job) {
  if (job.grid.empty()) throw ConfigError("run_ablation: empty grid");
  if (job.train_seqs.empty()) throw DataError("run_ablation: no training sequences");
  if (job.test_seqs.empty()) throw DataError("run_ablation: no test sequences");

  std::vector<EvalReport> reports;
  for (const GridPoint& pt : job.grid) {
    std::vector<WindowSample> train_set;
    for (const SkeletonSequence& seq : job.train_seqs) {
      auto w = make_windows(seq, pt.config.t_in, pt.config.t_out, job.stride);
      train_set.insert(train_set.end(), std::make_move_iterator(w.begin()),
                       std::make_move_iterator(w.end()));
    }
    const TrainResult trained = train(train_set, pt.config, job.train_cfg);

    auto samples = cap_samples(
        eval_windows(job.test_seqs, pt.config, job.fps, job.horizons_ms, job.stride),
        job.sample_cap, job.eval_seed);
    reports.push_back(evaluate(pt.label, model_predictor(trained.params, pt.config), samples,
                               job.fps, job.horizons_ms, job.mode, param_count(pt.config)));
  }
  return reports;
}

}  // namespace fsgn
