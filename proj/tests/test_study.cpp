#include "bayeshpo/study.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bayeshpo/errors.hpp"
#include "support/synthetic_kdd.hpp"

namespace bayeshpo::study {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

int run_cli(const std::string& args, std::string* stderr_text = nullptr) {
  const auto err = fs::temp_directory_path() / "bhpo_cli_stderr.txt";
  const std::string cmd = std::string(BHPO_STUDY_EXE) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  if (stderr_text) *stderr_text = slurp(err);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class StudyTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "bhpo_study_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    data_ = testing::write_synthetic_datasets(root_ / "data", 1500);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static nlohmann::json base_config(const std::string& out) {
    return {{"train", data_.train.string()},
            {"test_plus", data_.test_plus.string()},
            {"test_21", data_.test_21.string()},
            {"method", "bo-gp"},
            {"budget", 40},
            {"epochs", 3},
            {"batch_size", 128},
            {"seed", 7},
            {"output_dir", (root_ / out).string()}};
  }

  static fs::path write_config(const nlohmann::json& j, const std::string& name) {
    const auto p = root_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  // One shared BO study; several tests inspect its artifacts.
  static const StudyOutcome& bo_outcome() {
    static const StudyOutcome outcome = run_study(StudyConfig::from_json(base_config("bo")));
    return outcome;
  }

  static inline fs::path root_;
  static inline testing::SyntheticDatasets data_;
};

TEST_F(StudyTest, BayesianStudyWritesEveryArtifact) {
  const auto& o = bo_outcome();
  const auto out = root_ / "bo";
  ASSERT_EQ(o.history.size(), 40u);

  const auto trials = lines_of(out / "trials.jsonl");
  ASSERT_EQ(trials.size(), 40u);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto j = nlohmann::json::parse(trials[i]);
    EXPECT_EQ(j.at("index"), i);
    for (const char* key : {"config", "encoded", "objective", "seed", "flags"}) EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_FALSE(j.contains("wall_time_s"));
    EXPECT_GE(j.at("objective").get<double>(), -1.0);
    EXPECT_LE(j.at("objective").get<double>(), 0.0);
  }

  const auto conv = lines_of(out / "convergence.csv");
  ASSERT_EQ(conv.size(), 41u);
  EXPECT_EQ(conv[0], "index,best_so_far");
  double prev = INFINITY;
  for (std::size_t i = 1; i < conv.size(); ++i) {
    const double v = std::stod(split_csv(conv[i])[1]);
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_EQ(prev, o.history.best_objective());

  for (const char* name : {"samples_activation.csv", "samples_optimizer.csv"}) {
    const auto rows = lines_of(out / name);
    ASSERT_GE(rows.size(), 3u) << name;
    EXPECT_EQ(rows[0], "category,count");
    long total = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) total += std::stol(split_csv(rows[i])[1]);
    EXPECT_EQ(total, 40) << name;
  }
  EXPECT_EQ(lines_of(out / "samples_activation.csv").size(), 4u);

  const auto inc = nlohmann::json::parse(slurp(out / "incumbent.json"));
  const auto space = SearchSpace::default_dnn();
  EXPECT_EQ(space.config_from_json(inc.at("config")), o.history.incumbent().cfg);

  const auto results = lines_of(out / "results.csv");
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[0], "dataset,accuracy,precision,recall,f1");
  EXPECT_EQ(split_csv(results[1])[0], "KDDTest+");
  EXPECT_EQ(split_csv(results[2])[0], "KDDTest-21");
  for (std::size_t r = 1; r < 3; ++r) {
    const auto f = split_csv(results[r]);
    ASSERT_EQ(f.size(), 5u);
    for (std::size_t c = 1; c < 5; ++c) {
      EXPECT_EQ(f[c].size() - f[c].find('.'), 3u) << f[c];  // two decimals
      EXPECT_GE(std::stod(f[c]), 0.0);
      EXPECT_LE(std::stod(f[c]), 100.0);
    }
  }
  ASSERT_EQ(o.results.size(), 2u);
  // the synthetic signal is learnable
  EXPECT_GT(o.results[0].metrics.accuracy, 0.7);

  const auto report = nlohmann::json::parse(slurp(out / "dataset_report.json"));
  EXPECT_EQ(report.at("train").at("total"), 1500);
  EXPECT_TRUE(fs::exists(out / "study_config.json"));
  EXPECT_TRUE(fs::exists(out / "timings.csv"));
}

TEST_F(StudyTest, ArtifactsAreRederivableFromTrialLog) {
  (void)bo_outcome();
  const auto out = root_ / "bo";
  auto cfg = StudyConfig::load(out / "study_config.json");
  const auto space = cfg.search_space();
  const auto h = read_trials(space, out / "trials.jsonl");
  EXPECT_EQ(trials_jsonl(space, h, false), slurp(out / "trials.jsonl"));
  cfg.output_dir = root_ / "rederived";
  write_history_artifacts(cfg, space, h);
  for (const char* name : {"incumbent.json", "convergence.csv", "samples_activation.csv", "samples_optimizer.csv"})
    EXPECT_EQ(slurp(cfg.output_dir / name), slurp(out / name)) << name;
}

TEST_F(StudyTest, RerunIsByteIdentical) {
  (void)bo_outcome();
  auto j = base_config("bo_rerun");
  ASSERT_EQ(run_cli("run --config " + write_config(j, "rerun.json").string()), 0);
  EXPECT_EQ(slurp(root_ / "bo_rerun" / "trials.jsonl"), slurp(root_ / "bo" / "trials.jsonl"));
  EXPECT_TRUE(fs::exists(root_ / "bo_rerun" / "study.log"));
}

TEST_F(StudyTest, SeedOverrideChangesTheStudy) {
  auto j = base_config("seed_override");
  j["budget"] = 9;
  const auto cfg = write_config(j, "seed_override.json");
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --seed 8"), 0);
  const auto cfg_back = StudyConfig::load(root_ / "seed_override" / "study_config.json");
  EXPECT_EQ(cfg_back.seed, 8u);
}

TEST_F(StudyTest, RandomBudgetOneProducesAllArtifacts) {
  auto j = base_config("random1");
  j["method"] = "random";
  j["budget"] = 1;
  const auto o = run_study(StudyConfig::from_json(j));
  EXPECT_EQ(o.history.size(), 1u);
  const auto out = root_ / "random1";
  for (const char* name : {"trials.jsonl", "incumbent.json", "convergence.csv", "samples_activation.csv",
                           "samples_optimizer.csv", "results.csv"})
    EXPECT_TRUE(fs::exists(out / name)) << name;
  EXPECT_EQ(lines_of(out / "trials.jsonl").size(), 1u);
  EXPECT_EQ(lines_of(out / "convergence.csv").size(), 2u);
}

TEST_F(StudyTest, LandscapeGridAndIncumbentCell) {
  (void)bo_outcome();
  const auto out = root_ / "bo";
  const auto cfg = StudyConfig::load(out / "study_config.json");
  const auto r = emit_landscape(cfg, out / "trials.jsonl", "learning_rate", "n_neurons", 50, out);
  const auto rows = lines_of(out / "landscape.csv");
  ASSERT_EQ(rows.size(), 2501u);
  EXPECT_EQ(rows[0], "x,y,estimated_fitness");
  std::vector<double> values(r.fitness.data(), r.fitness.data() + r.fitness.size());
  std::nth_element(values.begin(), values.begin() + 1250, values.end());
  EXPECT_LE(r.fitness(r.incumbent_ix, r.incumbent_iy), values[1250]);
  EXPECT_NEAR(r.x_values.front(), 1e-6, 1e-18);
  EXPECT_NEAR(r.x_values.back(), 1e-1, 1e-13);
  const auto samples = lines_of(out / "landscape_samples.csv");
  EXPECT_EQ(samples.size(), 41u);
  EXPECT_EQ(samples[0], "x,y,objective,incumbent");

  EXPECT_THROW(emit_landscape(cfg, out / "trials.jsonl", "activation", "n_neurons", 50, out), ValidationError);
  EXPECT_THROW(emit_landscape(cfg, out / "trials.jsonl", "n_neurons", "n_neurons", 50, out), ValidationError);

  const auto short_log = root_ / "short" / "trials.jsonl";
  fs::create_directories(short_log.parent_path());
  {
    std::ofstream os(short_log);
    const auto all = lines_of(out / "trials.jsonl");
    for (int i = 0; i < 3; ++i) os << all[i] << "\n";
  }
  EXPECT_THROW(emit_landscape(cfg, short_log, "learning_rate", "n_neurons", 50, root_ / "short"), ValidationError);
}

TEST_F(StudyTest, CliLandscapeAndEvaluate) {
  (void)bo_outcome();
  const auto out = root_ / "bo";
  EXPECT_EQ(run_cli("landscape --trials " + (out / "trials.jsonl").string() +
                    " --x learning_rate --y n_hidden_layers --grid 10 --out " + (root_ / "land").string()),
            0);
  EXPECT_EQ(lines_of(root_ / "land" / "landscape.csv").size(), 101u);

  std::string err;
  EXPECT_EQ(run_cli("landscape --trials " + (out / "trials.jsonl").string() + " --x activation --y n_neurons", &err), 1);
  EXPECT_EQ(nlohmann::json::parse(err).at("error").at("kind"), "validation");

  ASSERT_EQ(run_cli("evaluate --incumbent " + (out / "incumbent.json").string() + " --out " +
                    (root_ / "eval").string()),
            0);
  EXPECT_EQ(slurp(root_ / "eval" / "results.csv"), slurp(out / "results.csv"));
}

TEST_F(StudyTest, CliUserErrorsExitWithOne) {
  std::string err;
  EXPECT_EQ(run_cli("run --config " + (root_ / "missing.json").string(), &err), 1);
  EXPECT_TRUE(nlohmann::json::parse(err).contains("error"));

  auto bad = base_config("bad");
  bad["budget"] = 4;  // below n_init
  EXPECT_EQ(run_cli("run --config " + write_config(bad, "bad.json").string(), &err), 1);
  EXPECT_EQ(nlohmann::json::parse(err).at("error").at("kind"), "validation");

  auto missing_data = base_config("nodata");
  missing_data["train"] = (root_ / "nope.txt").string();
  EXPECT_EQ(run_cli("run --config " + write_config(missing_data, "nodata.json").string(), &err), 1);

  EXPECT_EQ(run_cli("frobnicate", &err), 1);
}

TEST(StudyConfig, JsonRulesAndRelativePaths) {
  const auto j = nlohmann::json::parse(R"({"train": "d/KDDTrain+.txt", "test_plus": "/abs/KDDTest+.txt",
                                           "method": "random", "budget": 5, "output_dir": "out"})");
  const auto c = StudyConfig::from_json(j, "/base");
  EXPECT_EQ(c.train_path, fs::path("/base/d/KDDTrain+.txt"));
  EXPECT_EQ(c.test_plus_path, fs::path("/abs/KDDTest+.txt"));
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
  EXPECT_EQ(c.method, Method::kRandom);
  EXPECT_EQ(c.n_init, 8u);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(StudyConfig::from_json(c.to_json()).to_json(), c.to_json());

  EXPECT_THROW(StudyConfig::from_json(nlohmann::json::parse(R"({"budgett": 3})")), ValidationError);
  EXPECT_THROW(StudyConfig::from_json(nlohmann::json::parse(R"({"method": "grid"})")), ValidationError);
  EXPECT_THROW(StudyConfig::from_json(nlohmann::json::parse(R"({"budget": 5})")), ValidationError);
  StudyConfig random;
  random.method = Method::kRandom;
  random.budget = 3;
  EXPECT_NO_THROW(random.validate());
  random.budget = 0;
  EXPECT_THROW(random.validate(), ValidationError);
  EXPECT_EQ(StudyConfig{}.search_space().encoded_dim(), 9u);
}

TEST(StudyConfig, StrictInputDimensionIsEnforced) {
  const auto dir = fs::temp_directory_path() / "bhpo_strict_dim";
  fs::remove_all(dir);
  const auto data = testing::write_synthetic_datasets(dir, 200);
  StudyConfig cfg;
  cfg.train_path = data.train;
  cfg.test_plus_path = data.test_plus;
  cfg.test_21_path = data.test_21;
  cfg.expected_input_dim = 3;
  const auto prepared = prepare_data(cfg);
  EXPECT_FALSE(prepared.report.dim_matches);
  EXPECT_EQ(prepared.report.output_dim, prepared.encoder.output_dim());
  EXPECT_NE(std::find(prepared.report.constant_columns.begin(), prepared.report.constant_columns.end(),
                      "num_outbound_cmds"),
            prepared.report.constant_columns.end());
  cfg.strict_input_dim = true;
  EXPECT_THROW(prepare_data(cfg), ValidationError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace bayeshpo::study
