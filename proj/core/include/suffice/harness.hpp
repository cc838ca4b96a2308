#ifndef SUFFICE_HARNESS_HPP
#define SUFFICE_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "suffice/dataset.hpp"
#include "suffice/metrics.hpp"
#include "suffice/reweight.hpp"
#include "suffice/risk.hpp"
#include "suffice/trainer.hpp"

namespace suffice {

enum class Method { kErm, kIrmV1Reg, kReweight };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct CsvSource {
  std::string path;
  std::string label_col;
  std::string group_col;
};

/// Everything one experiment needs; mirrors the JSON config file.
struct ExperimentConfig {
  // Exactly one of csv/synthetic is set.
  std::optional<CsvSource> csv;
  std::optional<SyntheticConfig> synthetic;

  SplitSpec split;
  // Layer widths; a leading 0 means "use the dataset's feature count".
  std::vector<std::size_t> model_dims = {0, 16, 1};
  InnerConfig inner;
  OuterConfig outer;
  RiskConfig risk;
  Method method = Method::kErm;
  double noise_rho = 0.0;     // symmetric label noise on the training split
  std::size_t repetitions = 1;
  std::uint64_t base_seed = 0;
  std::string output_dir = "out";
};

/// Throws ValidationError/ConfigurationError on any bad field.
void validate(const ExperimentConfig& cfg);

struct RepetitionResult {
  std::uint64_t seed = 0;
  MetricReport metrics;             // on the test split
  double wall_clock_sec = 0.0;
  std::optional<SelectResult> selection;  // reweight runs only
};

struct Aggregate {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample std / sqrt(reps); 0 when reps == 1
};

struct RunReport {
  Method method = Method::kErm;
  std::vector<RepetitionResult> repetitions;
  Aggregate accuracy, suf_gap, dp_gap, eo_gap;
  double total_wall_clock_sec = 0.0;
};

/// Runs cfg.repetitions independent repetitions (repetition r uses seed
/// base_seed + r to derive its split/noise/training streams), evaluates on
/// the test split, and aggregates mean and standard error per metric.
/// Repetitions run in parallel when the SUFFICE_THREADS env var allows;
/// results are identical either way.
RunReport run_experiment(const ExperimentConfig& cfg);

enum class SweepParam { kBudget, kNoiseRho };
SweepParam sweep_param_from_name(const std::string& name);

/// One run per value with only the swept parameter changed; every value is
/// validated before any run starts.
std::vector<RunReport> sweep(const ExperimentConfig& cfg, SweepParam param,
                             const std::vector<double>& values);

/// Writes metrics.csv, summary.csv and timings.csv for a run, plus
/// s_polarization.csv and group_weights.csv for reweight runs. All files are
/// deterministic functions of the run results except timings.csv.
void emit_run(const RunReport& report, const std::string& output_dir);

/// Per-value subdirectories plus sweep_summary.csv and an SVG chart per
/// metric (accuracy, suf_gap) with mean lines and stderr bands.
void emit_sweep(const std::vector<RunReport>& reports, const std::string& param_name,
                const std::vector<double>& values, const std::string& output_dir);

/// JSON (de)serialization of the config file format.
ExperimentConfig config_from_json_file(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);

/// Loads or generates the configured dataset (before splitting/noise).
Dataset materialize_data(const ExperimentConfig& cfg);

}  // namespace suffice

#endif  // SUFFICE_HARNESS_HPP
