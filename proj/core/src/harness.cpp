#include "suffice/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "suffice/errors.hpp"
#include "suffice/rng.hpp"

namespace suffice {

namespace {

// Stream tags for per-repetition seed derivation (base: base_seed + rep).
constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kNoiseStream = 12;
constexpr std::uint64_t kInnerStream = 13;
constexpr std::uint64_t kInitStream = 14;
constexpr std::uint64_t kOuterStream = 15;

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::kErm: return "erm";
    case Method::kIrmV1Reg: return "irmv1_reg";
    case Method::kReweight: return "reweight";
  }
  return "erm";
}

Method method_from_name(const std::string& name) {
  if (name == "erm") return Method::kErm;
  if (name == "irmv1_reg") return Method::kIrmV1Reg;
  if (name == "reweight") return Method::kReweight;
  throw ValidationError("unknown method '" + name + "' (expected erm|irmv1_reg|reweight)");
}

SweepParam sweep_param_from_name(const std::string& name) {
  if (name == "K") return SweepParam::kBudget;
  if (name == "noise_rho") return SweepParam::kNoiseRho;
  throw ValidationError("unknown sweep parameter '" + name + "' (expected K|noise_rho)");
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.csv.has_value() == cfg.synthetic.has_value()) {
    throw ValidationError("config must name exactly one data source (csv or synthetic)");
  }
  if (cfg.csv) {
    if (!std::filesystem::exists(cfg.csv->path)) {
      throw ValidationError("csv file does not exist: " + cfg.csv->path);
    }
    if (cfg.csv->label_col.empty() || cfg.csv->group_col.empty()) {
      throw ValidationError("csv source needs label_col and group_col");
    }
  }
  if (cfg.synthetic) validate(*cfg.synthetic);
  validate(cfg.split);
  if (cfg.model_dims.size() < 2 || cfg.model_dims.back() != 1) {
    throw ValidationError("model_dims must end in a single output logit");
  }
  for (std::size_t i = 1; i < cfg.model_dims.size(); ++i) {
    if (cfg.model_dims[i] == 0) throw ValidationError("model_dims has a zero width");
  }
  if (cfg.repetitions == 0) throw ValidationError("repetitions must be >= 1");
  if (!(cfg.noise_rho >= 0.0 && cfg.noise_rho <= 1.0)) {
    throw ValidationError("noise_rho must lie in [0,1]");
  }
  if (!(cfg.inner.lr > 0.0) || cfg.inner.epochs == 0) {
    throw ValidationError("inner config: lr must be > 0 and epochs >= 1");
  }
  if (!(cfg.inner.momentum >= 0.0 && cfg.inner.momentum < 1.0)) {
    throw ValidationError("inner config: momentum must lie in [0,1)");
  }
  if (cfg.method == Method::kReweight) {
    if (cfg.outer.budget == 0) throw ValidationError("outer budget K must be >= 1");
    if (cfg.outer.iterations == 0) throw ValidationError("outer iterations must be >= 1");
    if (!(cfg.outer.lr > 0.0)) throw ValidationError("outer lr must be > 0");
    if (!(cfg.outer.prob_clamp > 0.0 && cfg.outer.prob_clamp < 0.5)) {
      throw ValidationError("prob_clamp must lie in (0, 0.5)");
    }
    if (!(cfg.outer.adam_beta1 >= 0.0 && cfg.outer.adam_beta1 < 1.0) ||
        !(cfg.outer.adam_beta2 >= 0.0 && cfg.outer.adam_beta2 < 1.0)) {
      throw ValidationError("adam betas must lie in [0,1)");
    }
    if (cfg.risk.eval_batch == 0) throw ValidationError("risk eval_batch must be >= 1");
  }
  if (cfg.risk.lambda < 0.0) throw ValidationError("risk lambda must be >= 0");
  if (cfg.output_dir.empty()) throw ValidationError("output_dir must not be empty");
}

Dataset materialize_data(const ExperimentConfig& cfg) {
  if (cfg.csv) return load_csv(cfg.csv->path, cfg.csv->label_col, cfg.csv->group_col);
  return gen_synthetic(*cfg.synthetic);
}

namespace {

std::vector<std::size_t> resolve_dims(const std::vector<std::size_t>& dims,
                                      std::size_t input_dim) {
  std::vector<std::size_t> out = dims;
  if (out.front() == 0) out.front() = input_dim;
  if (out.front() != input_dim) {
    throw ValidationError("model_dims input width " + std::to_string(out.front()) +
                          " does not match the data's " + std::to_string(input_dim) +
                          " features");
  }
  return out;
}

// Full-batch heavy-ball descent on sum_e L_e + lambda * penalty. Every epoch
// sees every group, so the per-environment terms are always defined.
ModelParams train_irm_regularized(const ModelParams& init, const Dataset& ds,
                                  const InnerConfig& cfg, double lambda) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  ModelParams params = init;
  Gradients velocity = zero_gradients(init);
  double prev_objective = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto [objective, grads] = irm_objective_backward(params, ds, idx, lambda);
    for (std::size_t l = 0; l < grads.size(); ++l) {
      Layer& layer = params.layers[l];
      LayerGrad& v = velocity[l];
      const LayerGrad& g = grads[l];
      for (std::size_t k = 0; k < v.weights.data.size(); ++k) {
        v.weights.data[k] = cfg.momentum * v.weights.data[k] + g.weights.data[k];
        layer.weights.data[k] -= cfg.lr * v.weights.data[k];
      }
      for (std::size_t k = 0; k < v.bias.size(); ++k) {
        v.bias[k] = cfg.momentum * v.bias[k] + g.bias[k];
        layer.bias[k] -= cfg.lr * v.bias[k];
      }
    }
    if (epoch > 0 && std::abs(prev_objective - objective) < cfg.tol) break;
    prev_objective = objective;
  }
  return params;
}

RepetitionResult run_repetition(const ExperimentConfig& cfg, const Dataset& data,
                                std::size_t rep) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t rep_seed = cfg.base_seed + rep;

  SplitSpec split_spec = cfg.split;
  split_spec.seed = derive_seed(rep_seed, kSplitStream);
  auto [train, val, test] = split(data, split_spec);
  (void)val;  // reserved; evaluation uses the test split only
  if (cfg.noise_rho > 0.0) {
    train = inject_label_noise(train, cfg.noise_rho, derive_seed(rep_seed, kNoiseStream));
  }

  const std::vector<std::size_t> dims = resolve_dims(cfg.model_dims, train.dim());
  InnerConfig inner = cfg.inner;
  inner.seed = derive_seed(rep_seed, kInnerStream);
  const ModelParams init = init_mlp(dims, derive_seed(rep_seed, kInitStream));

  RepetitionResult result;
  result.seed = rep_seed;

  ModelParams model;
  switch (cfg.method) {
    case Method::kErm: {
      const std::vector<double> ones(train.size(), 1.0);
      model = train_weighted_erm(init, train, ones, inner).params;
      break;
    }
    case Method::kIrmV1Reg: {
      model = train_irm_regularized(init, train, inner, cfg.risk.lambda);
      break;
    }
    case Method::kReweight: {
      OuterConfig outer = cfg.outer;
      outer.seed = derive_seed(rep_seed, kOuterStream);
      SelectResult sel = run_selection(train, train, dims, inner, outer, cfg.risk);
      std::vector<double> weights(train.size(), 0.0);
      for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] = sel.final_mask[i] ? 1.0 : 0.0;
      }
      model = train_weighted_erm(init, train, weights, inner).params;
      result.selection = std::move(sel);
      break;
    }
  }

  result.metrics = compute_metrics(predict(model, test.features), test.labels,
                                   test.groups, test.num_groups());
  result.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate agg;
  const std::size_t n = values.size();
  for (double v : values) agg.mean += v;
  agg.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
    agg.stderr_ = std::sqrt(ss / static_cast<double>(n - 1)) /
                  std::sqrt(static_cast<double>(n));
  }
  return agg;
}

std::size_t max_threads_from_env() {
  const char* env = std::getenv("SUFFICE_THREADS");
  if (env == nullptr) return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v < 1) return 1;
  return static_cast<std::size_t>(v);
}

[[noreturn]] void rethrow_annotated(std::size_t rep, const std::exception& e,
                                    bool is_validation) {
  const std::string msg = "repetition " + std::to_string(rep) + ": " + e.what();
  if (is_validation) throw ValidationError(msg);
  throw std::runtime_error(msg);
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  const Dataset data = materialize_data(cfg);

  RunReport report;
  report.method = cfg.method;
  report.repetitions.resize(cfg.repetitions);

  const std::size_t threads =
      std::min<std::size_t>(max_threads_from_env(), cfg.repetitions);
  if (threads <= 1) {
    for (std::size_t r = 0; r < cfg.repetitions; ++r) {
      try {
        report.repetitions[r] = run_repetition(cfg, data, r);
      } catch (const ValidationError& e) {
        rethrow_annotated(r, e, true);
      } catch (const std::exception& e) {
        rethrow_annotated(r, e, false);
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::pair<std::size_t, std::string>> failures;  // (rep, what)
    std::vector<bool> failure_is_validation;
    std::mutex failure_mutex;
    auto worker = [&]() {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= cfg.repetitions) return;
        try {
          report.repetitions[r] = run_repetition(cfg, data, r);
        } catch (const std::exception& e) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          failures.emplace_back(r, e.what());
          failure_is_validation.push_back(dynamic_cast<const ValidationError*>(&e) !=
                                          nullptr);
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (!failures.empty()) {
      std::size_t first = 0;
      for (std::size_t k = 1; k < failures.size(); ++k) {
        if (failures[k].first < failures[first].first) first = k;
      }
      const std::string msg = "repetition " + std::to_string(failures[first].first) +
                              ": " + failures[first].second;
      if (failure_is_validation[first]) throw ValidationError(msg);
      throw std::runtime_error(msg);
    }
  }

  std::vector<double> acc, suf, dp, eo;
  for (const RepetitionResult& r : report.repetitions) {
    acc.push_back(r.metrics.accuracy);
    suf.push_back(r.metrics.suf_gap);
    dp.push_back(r.metrics.dp_gap);
    eo.push_back(r.metrics.eo_gap);
  }
  report.accuracy = aggregate_of(acc);
  report.suf_gap = aggregate_of(suf);
  report.dp_gap = aggregate_of(dp);
  report.eo_gap = aggregate_of(eo);
  report.total_wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<RunReport> sweep(const ExperimentConfig& cfg, SweepParam param,
                             const std::vector<double>& values) {
  validate(cfg);
  if (values.empty()) throw ValidationError("sweep: empty value list");
  for (double v : values) {
    if (param == SweepParam::kBudget) {
      if (!(v >= 1.0) || v != std::floor(v)) {
        throw ValidationError("sweep: K values must be positive integers");
      }
      if (cfg.synthetic && v > static_cast<double>(cfg.synthetic->n)) {
        throw ValidationError("sweep: K exceeds the dataset size");
      }
    } else {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("sweep: noise_rho values must lie in [0,1]");
      }
    }
  }
  std::vector<RunReport> reports;
  reports.reserve(values.size());
  for (double v : values) {
    ExperimentConfig point = cfg;  // shared base_seed: only the parameter varies
    if (param == SweepParam::kBudget) {
      point.outer.budget = static_cast<std::size_t>(v);
    } else {
      point.noise_rho = v;
    }
    reports.push_back(run_experiment(point));
  }
  return reports;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_summary_row(std::ofstream& out, const RunReport& r) {
  out << method_name(r.method) << "," << r.repetitions.size() << ","
      << format_fixed(r.accuracy.mean) << "," << format_fixed(r.accuracy.stderr_) << ","
      << format_fixed(r.suf_gap.mean) << "," << format_fixed(r.suf_gap.stderr_) << ","
      << format_fixed(r.dp_gap.mean) << "," << format_fixed(r.dp_gap.stderr_) << ","
      << format_fixed(r.eo_gap.mean) << "," << format_fixed(r.eo_gap.stderr_) << "\n";
}

constexpr const char* kSummaryHeader =
    "method,repetitions,accuracy_mean,accuracy_stderr,suf_gap_mean,suf_gap_stderr,"
    "dp_gap_mean,dp_gap_stderr,eo_gap_mean,eo_gap_stderr";

void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<double>& xs, const std::vector<double>& means,
                     const std::vector<double>& stderrs) {
  const double width = 640.0, height = 420.0;
  const double ml = 70.0, mr = 20.0, mt = 40.0, mb = 50.0;
  double x_min = xs.front(), x_max = xs.back();
  if (x_max == x_min) x_max = x_min + 1.0;
  double y_min = means.front(), y_max = means.front();
  for (std::size_t i = 0; i < means.size(); ++i) {
    y_min = std::min(y_min, means[i] - stderrs[i]);
    y_max = std::max(y_max, means[i] + stderrs[i]);
  }
  const double pad = std::max(1e-6, 0.1 * (y_max - y_min));
  y_min -= pad;
  y_max += pad;
  const auto px = [&](double x) {
    return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr);
  };
  const auto py = [&](double y) {
    return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
  };
  const auto num = [](double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << " "
      << num(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  // Axes.
  out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(height - mb) << "\" x2=\""
      << num(width - mr) << "\" y2=\"" << num(height - mb)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml)
      << "\" y2=\"" << num(height - mb) << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << num(width / 2) << "\" y=\"" << num(height - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << num(height / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << num(height / 2) << ")\">" << y_label
      << "</text>\n";
  // Stderr band.
  out << "<polygon fill=\"#a8c6e8\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << num(px(xs[i])) << "," << num(py(means[i] + stderrs[i])) << " ";
  }
  for (std::size_t i = xs.size(); i-- > 0;) {
    out << num(px(xs[i])) << "," << num(py(means[i] - stderrs[i])) << " ";
  }
  out << "\"/>\n";
  // Mean line and points.
  out << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << num(px(xs[i])) << "," << num(py(means[i])) << " ";
  }
  out << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << "<circle cx=\"" << num(px(xs[i])) << "\" cy=\"" << num(py(means[i]))
        << "\" r=\"3\" fill=\"#1f5fa8\"/>\n";
    out << "<text x=\"" << num(px(xs[i])) << "\" y=\"" << num(height - mb + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << num(xs[i]) << "</text>\n";
  }
  // Y-axis end labels.
  out << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(py(y_min) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(y_min) << "</text>\n";
  out << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(py(y_max) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(y_max) << "</text>\n";
  out << "</svg>\n";
}

}  // namespace

void emit_run(const RunReport& report, const std::string& output_dir) {
  if (report.repetitions.empty()) throw ValidationError("emit_run: empty report");
  const std::filesystem::path dir(output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + output_dir);

  {
    std::ofstream out = open_out(dir / "metrics.csv");
    out << "method,seed,accuracy,suf_gap,dp_gap,eo_gap\n";
    for (const RepetitionResult& r : report.repetitions) {
      out << method_name(report.method) << "," << r.seed << ","
          << format_fixed(r.metrics.accuracy) << "," << format_fixed(r.metrics.suf_gap)
          << "," << format_fixed(r.metrics.dp_gap) << ","
          << format_fixed(r.metrics.eo_gap) << "\n";
    }
  }
  {
    std::ofstream out = open_out(dir / "summary.csv");
    out << kSummaryHeader << "\n";
    write_summary_row(out, report);
  }
  {
    // Measured timings live apart from the deterministic result files.
    std::ofstream out = open_out(dir / "timings.csv");
    out << "method,seed,wall_clock\n";
    for (const RepetitionResult& r : report.repetitions) {
      out << method_name(report.method) << "," << r.seed << ","
          << format_fixed(r.wall_clock_sec) << "\n";
    }
  }

  const bool has_selection =
      std::any_of(report.repetitions.begin(), report.repetitions.end(),
                  [](const RepetitionResult& r) { return r.selection.has_value(); });
  if (!has_selection) return;

  {
    std::ofstream out = open_out(dir / "s_polarization.csv");
    out << "repetition,iteration,uncertain_fraction\n";
    for (std::size_t rep = 0; rep < report.repetitions.size(); ++rep) {
      const auto& sel = report.repetitions[rep].selection;
      if (!sel) continue;
      for (std::size_t t = 0; t < sel->uncertain_fraction_history.size(); ++t) {
        out << rep << "," << (t + 1) << ","
            << format_fixed(sel->uncertain_fraction_history[t]) << "\n";
      }
    }
  }
  {
    std::ofstream out = open_out(dir / "group_weights.csv");
    out << "repetition,iteration,group,label,weight_fraction\n";
    for (std::size_t rep = 0; rep < report.repetitions.size(); ++rep) {
      const auto& sel = report.repetitions[rep].selection;
      if (!sel) continue;
      for (std::size_t t = 0; t < sel->group_weight_history.size(); ++t) {
        const std::vector<double>& cells = sel->group_weight_history[t];
        for (int g = 0; g < sel->num_groups; ++g) {
          for (int y = 0; y <= 1; ++y) {
            out << rep << "," << (t + 1) << "," << g << "," << y << ","
                << format_fixed(cells[static_cast<std::size_t>(g) * 2 +
                                      static_cast<std::size_t>(y)])
                << "\n";
          }
        }
      }
    }
  }
}

void emit_sweep(const std::vector<RunReport>& reports, const std::string& param_name,
                const std::vector<double>& values, const std::string& output_dir) {
  if (reports.empty() || reports.size() != values.size()) {
    throw ValidationError("emit_sweep: reports and values must align and be nonempty");
  }
  const std::filesystem::path dir(output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + output_dir);

  char value_buf[64];
  for (std::size_t k = 0; k < reports.size(); ++k) {
    std::snprintf(value_buf, sizeof(value_buf), "%g", values[k]);
    emit_run(reports[k], (dir / (param_name + "_" + value_buf)).string());
  }
  {
    std::ofstream out = open_out(dir / "sweep_summary.csv");
    out << "param,value," << kSummaryHeader << "\n";
    for (std::size_t k = 0; k < reports.size(); ++k) {
      std::snprintf(value_buf, sizeof(value_buf), "%g", values[k]);
      out << param_name << "," << value_buf << ",";
      write_summary_row(out, reports[k]);
    }
  }

  std::vector<double> acc_mean, acc_err, suf_mean, suf_err;
  for (const RunReport& r : reports) {
    acc_mean.push_back(r.accuracy.mean);
    acc_err.push_back(r.accuracy.stderr_);
    suf_mean.push_back(r.suf_gap.mean);
    suf_err.push_back(r.suf_gap.stderr_);
  }
  const std::string method = method_name(reports.front().method);
  write_svg_chart(dir / ("sweep_" + param_name + "_accuracy.svg"),
                  method + ": accuracy vs " + param_name, param_name, "accuracy", values,
                  acc_mean, acc_err);
  write_svg_chart(dir / ("sweep_" + param_name + "_suf_gap.svg"),
                  method + ": sufficiency gap vs " + param_name, param_name,
                  "sufficiency gap", values, suf_mean, suf_err);
}

namespace {

using nlohmann::json;

void expect_keys(const json& obj, const std::string& where,
                 const std::vector<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError("unknown field '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  expect_keys(root, "config",
              {"data", "split", "model_dims", "inner", "outer", "risk", "method",
               "noise_rho", "repetitions", "base_seed", "output_dir"});

  ExperimentConfig cfg;
  if (!root.contains("data")) throw SchemaError("config is missing 'data'");
  const json& data = root.at("data");
  std::string type;
  read_field(data, "type", type);
  if (type == "csv") {
    expect_keys(data, "data", {"type", "path", "label_col", "group_col"});
    CsvSource src;
    read_field(data, "path", src.path);
    read_field(data, "label_col", src.label_col);
    read_field(data, "group_col", src.group_col);
    cfg.csv = std::move(src);
  } else if (type == "synthetic") {
    expect_keys(data, "data",
                {"type", "n", "pi", "base_rates", "core_dim", "core_sep", "core_noise",
                 "spurious_strength", "spurious_noise", "seed"});
    SyntheticConfig syn;
    read_field(data, "n", syn.n);
    read_field(data, "pi", syn.pi);
    read_field(data, "base_rates", syn.base_rates);
    read_field(data, "core_dim", syn.core_dim);
    read_field(data, "core_sep", syn.core_sep);
    read_field(data, "core_noise", syn.core_noise);
    read_field(data, "spurious_strength", syn.spurious_strength);
    read_field(data, "spurious_noise", syn.spurious_noise);
    read_field(data, "seed", syn.seed);
    cfg.synthetic = syn;
  } else {
    throw SchemaError("data.type must be 'csv' or 'synthetic'");
  }

  if (root.contains("split")) {
    const json& split = root.at("split");
    expect_keys(split, "split",
                {"train_frac", "val_frac", "test_frac", "stratified", "seed"});
    read_field(split, "train_frac", cfg.split.train_frac);
    read_field(split, "val_frac", cfg.split.val_frac);
    read_field(split, "test_frac", cfg.split.test_frac);
    read_field(split, "stratified", cfg.split.stratified);
    read_field(split, "seed", cfg.split.seed);
  }
  read_field(root, "model_dims", cfg.model_dims);
  if (root.contains("inner")) {
    const json& inner = root.at("inner");
    expect_keys(inner, "inner", {"epochs", "lr", "momentum", "batch_size", "tol", "seed"});
    read_field(inner, "epochs", cfg.inner.epochs);
    read_field(inner, "lr", cfg.inner.lr);
    read_field(inner, "momentum", cfg.inner.momentum);
    read_field(inner, "batch_size", cfg.inner.batch_size);
    read_field(inner, "tol", cfg.inner.tol);
    read_field(inner, "seed", cfg.inner.seed);
  }
  if (root.contains("outer")) {
    const json& outer = root.at("outer");
    expect_keys(outer, "outer",
                {"budget", "iterations", "optimizer", "lr", "cosine_schedule",
                 "adam_beta1", "adam_beta2", "adam_eps", "prob_clamp", "baseline",
                 "seed"});
    read_field(outer, "budget", cfg.outer.budget);
    read_field(outer, "iterations", cfg.outer.iterations);
    std::string opt = "projected_adam";
    if (cfg.outer.optimizer == OuterOptimizer::kProjectedSgd) opt = "projected_sgd";
    read_field(outer, "optimizer", opt);
    if (opt == "projected_sgd") {
      cfg.outer.optimizer = OuterOptimizer::kProjectedSgd;
    } else if (opt == "projected_adam") {
      cfg.outer.optimizer = OuterOptimizer::kProjectedAdam;
    } else {
      throw SchemaError("outer.optimizer must be projected_sgd or projected_adam");
    }
    read_field(outer, "lr", cfg.outer.lr);
    read_field(outer, "cosine_schedule", cfg.outer.cosine_schedule);
    read_field(outer, "adam_beta1", cfg.outer.adam_beta1);
    read_field(outer, "adam_beta2", cfg.outer.adam_beta2);
    read_field(outer, "adam_eps", cfg.outer.adam_eps);
    read_field(outer, "prob_clamp", cfg.outer.prob_clamp);
    read_field(outer, "baseline", cfg.outer.baseline);
    read_field(outer, "seed", cfg.outer.seed);
  }
  if (root.contains("risk")) {
    const json& risk = root.at("risk");
    expect_keys(risk, "risk", {"variant", "lambda", "eval_batch", "penalty_form"});
    std::string variant = "irmv1";
    if (cfg.risk.variant == RiskVariant::kRex) variant = "rex";
    read_field(risk, "variant", variant);
    if (variant == "irmv1") {
      cfg.risk.variant = RiskVariant::kIrmV1;
    } else if (variant == "rex") {
      cfg.risk.variant = RiskVariant::kRex;
    } else {
      throw SchemaError("risk.variant must be irmv1 or rex");
    }
    read_field(risk, "lambda", cfg.risk.lambda);
    read_field(risk, "eval_batch", cfg.risk.eval_batch);
    std::string form = "dummy_scalar";
    read_field(risk, "penalty_form", form);
    if (form == "dummy_scalar") {
      cfg.risk.penalty_form = PenaltyForm::kDummyScalar;
    } else if (form == "last_layer") {
      cfg.risk.penalty_form = PenaltyForm::kLastLayer;
    } else {
      throw SchemaError("risk.penalty_form must be dummy_scalar or last_layer");
    }
  }
  std::string method = "erm";
  read_field(root, "method", method);
  cfg.method = method_from_name(method);
  read_field(root, "noise_rho", cfg.noise_rho);
  read_field(root, "repetitions", cfg.repetitions);
  read_field(root, "base_seed", cfg.base_seed);
  read_field(root, "output_dir", cfg.output_dir);
  return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json root;
  if (cfg.csv) {
    root["data"] = {{"type", "csv"},
                    {"path", cfg.csv->path},
                    {"label_col", cfg.csv->label_col},
                    {"group_col", cfg.csv->group_col}};
  } else if (cfg.synthetic) {
    const SyntheticConfig& s = *cfg.synthetic;
    root["data"] = {{"type", "synthetic"},
                    {"n", s.n},
                    {"pi", s.pi},
                    {"base_rates", s.base_rates},
                    {"core_dim", s.core_dim},
                    {"core_sep", s.core_sep},
                    {"core_noise", s.core_noise},
                    {"spurious_strength", s.spurious_strength},
                    {"spurious_noise", s.spurious_noise},
                    {"seed", s.seed}};
  }
  root["split"] = {{"train_frac", cfg.split.train_frac},
                   {"val_frac", cfg.split.val_frac},
                   {"test_frac", cfg.split.test_frac},
                   {"stratified", cfg.split.stratified},
                   {"seed", cfg.split.seed}};
  root["model_dims"] = cfg.model_dims;
  root["inner"] = {{"epochs", cfg.inner.epochs},     {"lr", cfg.inner.lr},
                   {"momentum", cfg.inner.momentum}, {"batch_size", cfg.inner.batch_size},
                   {"tol", cfg.inner.tol},           {"seed", cfg.inner.seed}};
  root["outer"] = {
      {"budget", cfg.outer.budget},
      {"iterations", cfg.outer.iterations},
      {"optimizer", cfg.outer.optimizer == OuterOptimizer::kProjectedSgd
                        ? "projected_sgd"
                        : "projected_adam"},
      {"lr", cfg.outer.lr},
      {"cosine_schedule", cfg.outer.cosine_schedule},
      {"adam_beta1", cfg.outer.adam_beta1},
      {"adam_beta2", cfg.outer.adam_beta2},
      {"adam_eps", cfg.outer.adam_eps},
      {"prob_clamp", cfg.outer.prob_clamp},
      {"baseline", cfg.outer.baseline},
      {"seed", cfg.outer.seed}};
  root["risk"] = {{"variant", cfg.risk.variant == RiskVariant::kRex ? "rex" : "irmv1"},
                  {"lambda", cfg.risk.lambda},
                  {"eval_batch", cfg.risk.eval_batch},
                  {"penalty_form", cfg.risk.penalty_form == PenaltyForm::kLastLayer
                                       ? "last_layer"
                                       : "dummy_scalar"}};
  root["method"] = method_name(cfg.method);
  root["noise_rho"] = cfg.noise_rho;
  root["repetitions"] = cfg.repetitions;
  root["base_seed"] = cfg.base_seed;
  root["output_dir"] = cfg.output_dir;
  return root.dump(2) + "\n";
}

}  // namespace suffice
