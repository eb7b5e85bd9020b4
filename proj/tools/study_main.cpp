// study: run BO-GP / random-search DNN studies on NSL-KDD and derive figure/table data.
//
//   study run       --config study.json [--seed N]
//   study landscape --trials out/trials.jsonl --x learning_rate --y n_neurons [--config ...]
//   study evaluate  --incumbent out/incumbent.json [--config ...]
//
// Exit status: 0 success, 1 user error, 2 numerical failure. Failures print a JSON
// object {"error": {"kind": ..., "message": ...}} on stderr.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bayeshpo/errors.hpp"
#include "bayeshpo/study.hpp"

namespace fs = std::filesystem;
using namespace bayeshpo;

namespace {

int report_error(const char* kind, const std::string& message, int code) {
  nlohmann::json j{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << std::endl;
  return code;
}

void setup_logging(const std::optional<fs::path>& log_file, bool verbose) {
  std::vector<spdlog::sink_ptr> sinks{std::make_shared<spdlog::sinks::stderr_color_sink_mt>()};
  if (log_file) {
    fs::create_directories(log_file->parent_path());
    sinks.push_back(std::make_shared<spdlog::sinks::basic_file_sink_mt>(log_file->string(), true));
  }
  auto logger = std::make_shared<spdlog::logger>("study", sinks.begin(), sinks.end());
  logger->set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_default_logger(logger);
}

// Config next to the artifact when --config was not given.
study::StudyConfig config_for(const std::string& explicit_path, const fs::path& artifact) {
  fs::path p = explicit_path.empty() ? artifact.parent_path() / "study_config.json" : fs::path(explicit_path);
  if (!fs::exists(p)) throw ValidationError("study config '" + p.string() + "' not found; pass --config");
  return study::StudyConfig::load(p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian hyperparameter optimization studies for DNN intrusion detection"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run a BO-GP or random-search study");
  run->add_option("--config", config_path, "study config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the study seed");

  std::string trials_path, param_x, param_y, land_config, out_dir;
  std::size_t grid = 50;
  auto* land = app.add_subcommand("landscape", "GP posterior-mean landscape over two parameters");
  land->add_option("--trials", trials_path, "trials.jsonl")->required()->check(CLI::ExistingFile);
  land->add_option("--x", param_x, "first numeric parameter")->required();
  land->add_option("--y", param_y, "second numeric parameter")->required();
  land->add_option("--grid", grid, "grid points per axis")->capture_default_str();
  land->add_option("--config", land_config, "study config (default: study_config.json beside the trials)");
  land->add_option("--out", out_dir, "output directory (default: beside the trials)");

  std::string incumbent_path, eval_config, eval_out;
  auto* eval = app.add_subcommand("evaluate", "retrain an incumbent and score KDDTest+ / KDDTest-21");
  eval->add_option("--incumbent", incumbent_path, "incumbent.json")->required()->check(CLI::ExistingFile);
  eval->add_option("--config", eval_config, "study config (default: study_config.json beside the incumbent)");
  eval->add_option("--out", eval_out, "output directory (default: beside the incumbent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), 1);
  }

  try {
    if (*run) {
      auto cfg = study::StudyConfig::load(config_path);
      if (seed) cfg.seed = *seed;
      setup_logging(cfg.output_dir / "study.log", verbose);
      const auto outcome = study::run_study(cfg);
      std::cout << (cfg.output_dir / "trials.jsonl").string() << "\n";
      (void)outcome;
    } else if (*land) {
      setup_logging(std::nullopt, verbose);
      const auto cfg = config_for(land_config, trials_path);
      const fs::path out = out_dir.empty() ? fs::path(trials_path).parent_path() : fs::path(out_dir);
      study::emit_landscape(cfg, trials_path, param_x, param_y, grid, out);
      std::cout << (out / "landscape.csv").string() << "\n";
    } else if (*eval) {
      setup_logging(std::nullopt, verbose);
      const auto cfg = config_for(eval_config, incumbent_path);
      const fs::path out = eval_out.empty() ? fs::path(incumbent_path).parent_path() : fs::path(eval_out);
      const auto results = study::evaluate_incumbent(cfg, incumbent_path, out);
      std::cout << study::results_csv(results);
    }
  } catch (const NumericalError& e) {
    return report_error("numerical", e.what(), 2);
  } catch (const ValidationError& e) {
    return report_error("validation", e.what(), 1);
  } catch (const fs::filesystem_error& e) {
    return report_error("io", e.what(), 1);
  } catch (const nlohmann::json::exception& e) {
    return report_error("validation", e.what(), 1);
  }
  return 0;
}
