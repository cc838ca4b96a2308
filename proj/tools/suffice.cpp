// Command-line front end: run one experiment, sweep a parameter, or validate
// a config file. Exit codes: 0 success, 1 validation/config error, 2 runtime
// error.

#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "suffice/errors.hpp"
#include "suffice/harness.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw suffice::ValidationError("cannot parse sweep value '" + item + "'");
    }
    if (pos != item.size()) {
      throw suffice::ValidationError("cannot parse sweep value '" + item + "'");
    }
    values.push_back(v);
  }
  return values;
}

void print_summary(const suffice::RunReport& report) {
  std::cout << "method=" << suffice::method_name(report.method)
            << " repetitions=" << report.repetitions.size() << "\n"
            << "  accuracy " << report.accuracy.mean << " +/- " << report.accuracy.stderr_
            << "\n"
            << "  suf_gap  " << report.suf_gap.mean << " +/- " << report.suf_gap.stderr_
            << "\n"
            << "  dp_gap   " << report.dp_gap.mean << " +/- " << report.dp_gap.stderr_
            << "\n"
            << "  eo_gap   " << report.eo_gap.mean << " +/- " << report.eo_gap.stderr_
            << "\n"
            << "  wall_clock_sec " << report.total_wall_clock_sec << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample reweighting for group-sufficient classifiers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  std::string param_name;
  std::string values_csv;

  CLI::App* run_cmd = app.add_subcommand("run", "Run the configured experiment");
  run_cmd->add_option("--config", config_path, "JSON config file")->required();
  run_cmd->add_option("--output", output_override, "Override the config's output_dir");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Run the experiment once per parameter value");
  sweep_cmd->add_option("--config", config_path, "JSON config file")->required();
  sweep_cmd->add_option("--param", param_name, "Swept parameter: K or noise_rho")
      ->required();
  sweep_cmd->add_option("--values", values_csv, "Comma-separated values")->required();
  sweep_cmd->add_option("--output", output_override, "Override the config's output_dir");

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "Check a config file without running it");
  validate_cmd->add_option("--config", config_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    suffice::ExperimentConfig cfg = suffice::config_from_json_file(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;

    if (validate_cmd->parsed()) {
      suffice::validate(cfg);
      std::cout << "config ok: " << config_path << "\n";
      return 0;
    }
    if (run_cmd->parsed()) {
      const suffice::RunReport report = suffice::run_experiment(cfg);
      suffice::emit_run(report, cfg.output_dir);
      print_summary(report);
      std::cout << "results written to " << cfg.output_dir << "\n";
      return 0;
    }
    // sweep
    const suffice::SweepParam param = suffice::sweep_param_from_name(param_name);
    const std::vector<double> values = parse_values(values_csv);
    const std::vector<suffice::RunReport> reports = suffice::sweep(cfg, param, values);
    suffice::emit_sweep(reports, param_name, values, cfg.output_dir);
    for (std::size_t k = 0; k < reports.size(); ++k) {
      std::cout << param_name << "=" << values[k] << "\n";
      print_summary(reports[k]);
    }
    std::cout << "results written to " << cfg.output_dir << "\n";
    return 0;
  } catch (const suffice::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
