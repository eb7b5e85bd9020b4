#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bayeshpo/evaluation.hpp"
#include "bayeshpo/gp.hpp"
#include "bayeshpo/history.hpp"
#include "bayeshpo/nslkdd.hpp"
#include "bayeshpo/search_space.hpp"

namespace bayeshpo::study {

enum class Method { kBayesian, kRandom };

Method method_from_string(std::string_view s);  // "bo-gp" | "random"
std::string to_string(Method m);

inline constexpr std::uint64_t kDefaultEvalSeed = 20220117;

struct StudyConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_plus_path;
  std::filesystem::path test_21_path;
  std::filesystem::path search_space_path;  // empty = use preset
  std::string search_space_preset = "default";
  Method method = Method::kBayesian;
  std::size_t budget = 40;
  std::size_t n_init = 8;
  KernelFamily kernel = KernelFamily::kMatern52;
  int gp_restarts = 5;
  int epochs = 10;
  int batch_size = 256;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 0;      // subsample + validation split
  std::uint64_t eval_seed = kDefaultEvalSeed;
  double validation_fraction = 0.2;
  std::size_t subsample_rows = 0;   // 0 = use every training row
  std::size_t expected_input_dim = 121;
  bool strict_input_dim = false;
  double threshold = kDefaultThreshold;
  bool log_wall_time = false;       // wall times break byte-identical logs
  bool evaluate = true;             // retrain the incumbent and score the test sets
  std::filesystem::path output_dir = "study_out";

  /// Relative paths resolve against `base_dir`.
  static StudyConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static StudyConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
  SearchSpace search_space() const;
};

struct DatasetReport {
  nslkdd::ClassCounts train_counts;
  nslkdd::ClassCounts test_plus_counts;
  nslkdd::ClassCounts test_21_counts;
  std::size_t output_dim = 0;
  std::size_t expected_input_dim = 0;
  bool dim_matches = false;
  std::vector<std::string> constant_columns;
  std::size_t train_rows_used = 0;
  nlohmann::json to_json() const;
};

/// Encoded training data shared by every trial of a study.
struct PreparedData {
  nslkdd::EncoderState encoder;
  nslkdd::DesignMatrix train;  // after optional subsampling
  nslkdd::Split split;
  DatasetReport report;
};

/// Parses and encodes the training file; test files are only counted when `with_tests`.
PreparedData prepare_data(const StudyConfig& cfg, bool with_tests = false);

struct DatasetResult {
  std::string dataset;
  MetricsReport metrics;
};

struct StudyOutcome {
  OptimizationHistory history;
  DatasetReport report;
  std::vector<DatasetResult> results;  // empty when cfg.evaluate is false
};

/// Runs the study and writes trials.jsonl, incumbent.json, convergence.csv,
/// samples_<categorical>.csv, study_config.json, dataset_report.json and
/// (when evaluating) results.csv into cfg.output_dir.
StudyOutcome run_study(const StudyConfig& cfg);

/// Same as run_study but with a caller-supplied objective (no dataset involved).
OptimizationHistory run_optimizer(const StudyConfig& cfg, const SearchSpace& space,
                                  const Objective& objective);

// ---- trial log ----

nlohmann::ordered_json trial_to_json(const SearchSpace& space, const Trial& t, bool wall_time);
Trial trial_from_json(const SearchSpace& space, const nlohmann::json& j);
std::string trials_jsonl(const SearchSpace& space, const OptimizationHistory& h, bool wall_time);
OptimizationHistory read_trials(const SearchSpace& space, const std::filesystem::path& path);

/// Writes every history-derived artifact (trials, incumbent, convergence, samples).
void write_history_artifacts(const StudyConfig& cfg, const SearchSpace& space,
                             const OptimizationHistory& h);

// ---- landscape ----

struct LandscapeResult {
  std::vector<double> x_values;  // parameter units, one per grid column
  std::vector<double> y_values;
  Eigen::MatrixXd fitness;       // fitness(ix, iy)
  std::size_t incumbent_ix = 0;
  std::size_t incumbent_iy = 0;
};

/// GP posterior mean over a grid of two numeric parameters, other coordinates held at
/// the incumbent's encoding. Writes landscape.csv and landscape_samples.csv to `out_dir`.
LandscapeResult emit_landscape(const StudyConfig& cfg, const std::filesystem::path& trials_path,
                               const std::string& param_x, const std::string& param_y,
                               std::size_t grid, const std::filesystem::path& out_dir);

// ---- incumbent evaluation ----

/// Retrains `incumbent` on the full (merged) training matrix with cfg.eval_seed and scores
/// KDDTest+ and KDDTest-21. Writes results.csv into `out_dir`.
std::vector<DatasetResult> evaluate_configuration(const StudyConfig& cfg,
                                                  const Configuration& incumbent,
                                                  const PreparedData& data,
                                                  const std::filesystem::path& out_dir);
std::vector<DatasetResult> evaluate_incumbent(const StudyConfig& cfg,
                                              const std::filesystem::path& incumbent_path,
                                              const std::filesystem::path& out_dir);

std::string results_csv(const std::vector<DatasetResult>& results);

/// Write-temp-then-rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace bayeshpo::study
