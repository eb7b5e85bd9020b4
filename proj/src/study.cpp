#include "bayeshpo/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "bayeshpo/errors.hpp"
#include "bayeshpo/optimizer.hpp"
#include "bayeshpo/rng.hpp"

namespace bayeshpo::study {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kLandscapeStream = 0x1A4D5CA9EULL;
constexpr std::uint64_t kSubsampleStream = 0x5B5A3E1ULL;
constexpr std::uint64_t kSplitStream = 0x5B117ULL;

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Parameter value represented by an encoded coordinate of a numeric parameter.
double axis_value(const ParamSpec& p, double c) {
  if (const auto* r = std::get_if<IntegerRange>(&p.kind))
    return static_cast<double>(r->lo) + c * static_cast<double>(r->hi - r->lo);
  const auto& r = std::get<RealRange>(p.kind);
  if (r.scale == Scale::kLog10) {
    const double a = std::log10(r.lo);
    return std::pow(10.0, a + c * (std::log10(r.hi) - a));
  }
  return r.lo + c * (r.hi - r.lo);
}

std::size_t numeric_axis(const SearchSpace& space, const std::string& name) {
  const auto i = space.index_of(name);
  if (space.params()[i].is_categorical())
    throw ValidationError("landscape axis '" + name + "' is categorical; numeric axes only");
  return i;
}

}  // namespace

Method method_from_string(std::string_view s) {
  if (s == "bo-gp" || s == "bo") return Method::kBayesian;
  if (s == "random") return Method::kRandom;
  throw ValidationError("unknown method '" + std::string(s) + "' (expected bo-gp or random)");
}

std::string to_string(Method m) { return m == Method::kBayesian ? "bo-gp" : "random"; }

StudyConfig StudyConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("study config must be a JSON object");
  static const std::set<std::string> known = {
      "train", "test_plus", "test_21", "search_space", "search_space_preset", "method",
      "budget", "n_init", "kernel", "gp_restarts", "epochs", "batch_size", "seed", "data_seed",
      "eval_seed", "validation_fraction", "subsample_rows", "expected_input_dim",
      "strict_input_dim", "threshold", "log_wall_time", "evaluate", "output_dir"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ValidationError("unknown study config key '" + key + "'");

  StudyConfig c;
  try {
    auto path = [&](const char* key, fs::path& out) {
      if (j.contains(key)) out = resolve(base_dir, j.at(key).get<std::string>());
    };
    path("train", c.train_path);
    path("test_plus", c.test_plus_path);
    path("test_21", c.test_21_path);
    path("search_space", c.search_space_path);
    path("output_dir", c.output_dir);
    c.search_space_preset = j.value("search_space_preset", c.search_space_preset);
    if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("kernel")) c.kernel = kernel_family_from_string(j.at("kernel").get<std::string>());
    c.budget = j.value("budget", c.budget);
    c.n_init = j.value("n_init", c.n_init);
    c.gp_restarts = j.value("gp_restarts", c.gp_restarts);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.data_seed = j.value("data_seed", c.data_seed);
    c.eval_seed = j.value("eval_seed", c.eval_seed);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.subsample_rows = j.value("subsample_rows", c.subsample_rows);
    c.expected_input_dim = j.value("expected_input_dim", c.expected_input_dim);
    c.strict_input_dim = j.value("strict_input_dim", c.strict_input_dim);
    c.threshold = j.value("threshold", c.threshold);
    c.log_wall_time = j.value("log_wall_time", c.log_wall_time);
    c.evaluate = j.value("evaluate", c.evaluate);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("study config: ") + e.what());
  }
  c.validate();
  return c;
}

StudyConfig StudyConfig::load(const fs::path& path) {
  return from_json(read_json(path), path.parent_path());
}

json StudyConfig::to_json() const {
  json j;
  j["train"] = train_path.string();
  j["test_plus"] = test_plus_path.string();
  j["test_21"] = test_21_path.string();
  if (!search_space_path.empty()) j["search_space"] = search_space_path.string();
  j["search_space_preset"] = search_space_preset;
  j["method"] = study::to_string(method);
  j["budget"] = budget;
  j["n_init"] = n_init;
  j["kernel"] = bayeshpo::to_string(kernel);
  j["gp_restarts"] = gp_restarts;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["data_seed"] = data_seed;
  j["eval_seed"] = eval_seed;
  j["validation_fraction"] = validation_fraction;
  j["subsample_rows"] = subsample_rows;
  j["expected_input_dim"] = expected_input_dim;
  j["strict_input_dim"] = strict_input_dim;
  j["threshold"] = threshold;
  j["log_wall_time"] = log_wall_time;
  j["evaluate"] = evaluate;
  j["output_dir"] = output_dir.string();
  return j;
}

void StudyConfig::validate() const {
  if (budget < 1) throw ValidationError("budget must be >= 1");
  if (method == Method::kBayesian && (n_init < 1 || budget < n_init))
    throw ValidationError("bo-gp requires budget >= n_init >= 1");
  if (epochs < 1 || batch_size < 1) throw ValidationError("epochs and batch_size must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ValidationError("validation_fraction must lie in (0,1)");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in [0,1]");
  if (gp_restarts < 0) throw ValidationError("gp_restarts must be >= 0");
}

SearchSpace StudyConfig::search_space() const {
  if (!search_space_path.empty()) return SearchSpace::from_json(read_json(search_space_path));
  return SearchSpace::preset(search_space_preset);
}

json DatasetReport::to_json() const {
  auto counts = [](const nslkdd::ClassCounts& c) {
    return json{{"normal", c.normal}, {"attack", c.attack}, {"total", c.total()}};
  };
  return json{{"train", counts(train_counts)},
              {"test_plus", counts(test_plus_counts)},
              {"test_21", counts(test_21_counts)},
              {"output_dim", output_dim},
              {"expected_input_dim", expected_input_dim},
              {"dim_matches", dim_matches},
              {"constant_columns", constant_columns},
              {"train_rows_used", train_rows_used}};
}

PreparedData prepare_data(const StudyConfig& cfg, bool with_tests) {
  if (cfg.train_path.empty()) throw ValidationError("study config has no 'train' dataset");
  PreparedData d;
  const auto records = nslkdd::parse_file(cfg.train_path);
  if (records.empty()) throw ValidationError("training file '" + cfg.train_path.string() + "' is empty");
  d.report.train_counts = nslkdd::count_classes(records);
  spdlog::info("{}: {} records (normal {}, attack {})", cfg.train_path.filename().string(),
               records.size(), d.report.train_counts.normal, d.report.train_counts.attack);

  d.encoder = nslkdd::fit_encoder(records);
  d.report.output_dim = d.encoder.output_dim();
  d.report.expected_input_dim = cfg.expected_input_dim;
  d.report.dim_matches = d.report.output_dim == cfg.expected_input_dim;
  const auto names = d.encoder.column_names();
  {
    std::size_t k = 0;
    for (const auto& name : names) {
      if (name.find('=') != std::string::npos) continue;
      if (d.encoder.min[k] == d.encoder.max[k]) d.report.constant_columns.push_back(name);
      ++k;
    }
  }
  spdlog::info("encoder output_dim = {} (38 numeric + {} protocol + {} service + {} flag)",
               d.report.output_dim, d.encoder.protocol_vocab.size(),
               d.encoder.service_vocab.size(), d.encoder.flag_vocab.size());
  if (!d.report.constant_columns.empty()) {
    std::string joined;
    for (const auto& c : d.report.constant_columns) joined += (joined.empty() ? "" : ", ") + c;
    spdlog::info("constant training columns (encoded as 0): {}", joined);
  }
  if (!d.report.dim_matches) {
    const auto msg = "encoder output_dim " + std::to_string(d.report.output_dim) +
                     " differs from expected_input_dim " + std::to_string(cfg.expected_input_dim);
    if (cfg.strict_input_dim) throw ValidationError(msg);
    spdlog::warn("{}", msg);
  }

  d.train = nslkdd::transform(d.encoder, records);
  if (cfg.subsample_rows > 0 && cfg.subsample_rows < d.train.rows()) {
    d.train = nslkdd::stratified_subsample(d.train, cfg.subsample_rows,
                                           derive_seed(cfg.data_seed, kSubsampleStream));
    spdlog::info("stratified subsample: {} training rows", d.train.rows());
  }
  d.report.train_rows_used = d.train.rows();
  d.split = nslkdd::stratified_split(d.train, 1.0 - cfg.validation_fraction,
                                     derive_seed(cfg.data_seed, kSplitStream));

  if (with_tests) {
    d.report.test_plus_counts = nslkdd::count_classes(nslkdd::parse_file(cfg.test_plus_path));
    d.report.test_21_counts = nslkdd::count_classes(nslkdd::parse_file(cfg.test_21_path));
  }
  return d;
}

ordered_json trial_to_json(const SearchSpace& space, const Trial& t, bool wall_time) {
  ordered_json j;
  j["index"] = t.index;
  j["config"] = ordered_json::object();
  for (std::size_t i = 0; i < space.size(); ++i)
    std::visit([&](const auto& v) { j["config"][space.params()[i].name] = v; }, t.cfg.values[i]);
  j["encoded"] = std::vector<double>(t.encoded.data(), t.encoded.data() + t.encoded.size());
  j["objective"] = t.objective;
  if (wall_time) j["wall_time_s"] = t.wall_time_s;
  j["seed"] = t.seed;
  j["flags"] = t.flags;
  return j;
}

Trial trial_from_json(const SearchSpace& space, const json& j) {
  try {
    Trial t;
    t.index = j.at("index").get<std::size_t>();
    t.cfg = space.config_from_json(j.at("config"));
    const auto enc = j.at("encoded").get<std::vector<double>>();
    t.encoded = Eigen::Map<const Eigen::VectorXd>(enc.data(), static_cast<Eigen::Index>(enc.size()));
    if (static_cast<std::size_t>(t.encoded.size()) != space.encoded_dim())
      throw ValidationError("trial " + std::to_string(t.index) + " has a wrong-sized encoding");
    t.objective = j.at("objective").get<double>();
    t.wall_time_s = j.value("wall_time_s", 0.0);
    t.seed = j.at("seed").get<std::uint64_t>();
    t.flags = j.value("flags", std::vector<std::string>{});
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed trial record: ") + e.what());
  }
}

std::string trials_jsonl(const SearchSpace& space, const OptimizationHistory& h, bool wall_time) {
  std::string out;
  for (const auto& t : h.trials()) {
    out += trial_to_json(space, t, wall_time).dump();
    out += '\n';
  }
  return out;
}

OptimizationHistory read_trials(const SearchSpace& space, const fs::path& path) {
  std::istringstream in(read_text(path));
  OptimizationHistory h;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    h.append(trial_from_json(space, j));
  }
  return h;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("cannot write '" + tmp.string() + "'");
    os << content;
    if (!os.flush()) throw ValidationError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

void write_history_artifacts(const StudyConfig& cfg, const SearchSpace& space,
                             const OptimizationHistory& h) {
  const auto& dir = cfg.output_dir;
  write_file_atomic(dir / "trials.jsonl", trials_jsonl(space, h, cfg.log_wall_time));

  const auto& inc = h.incumbent();
  ordered_json ij;
  ij["method"] = to_string(cfg.method);
  ij["index"] = inc.index;
  ij["objective"] = inc.objective;
  ij["validation_accuracy"] = -inc.objective;
  ij["seed"] = inc.seed;
  ij["config"] = trial_to_json(space, inc, false)["config"];
  write_file_atomic(dir / "incumbent.json", ij.dump(2) + "\n");

  std::string conv = "index,best_so_far\n";
  for (const auto& [i, best] : incumbent_curve(h)) conv += std::to_string(i) + "," + number(best) + "\n";
  write_file_atomic(dir / "convergence.csv", conv);

  for (std::size_t p = 0; p < space.size(); ++p) {
    const auto* cat = std::get_if<CategoricalSet>(&space.params()[p].kind);
    if (!cat) continue;
    std::map<std::string, std::size_t> counts;
    for (const auto& t : h.trials()) counts[std::get<std::string>(t.cfg.values[p])]++;
    std::string csv = "category,count\n";
    for (const auto& label : cat->labels) csv += label + "," + std::to_string(counts[label]) + "\n";
    write_file_atomic(dir / ("samples_" + space.params()[p].name + ".csv"), csv);
  }

  std::string timings = "index,wall_time_s\n";
  for (const auto& t : h.trials()) timings += std::to_string(t.index) + "," + number(t.wall_time_s) + "\n";
  write_file_atomic(dir / "timings.csv", timings);
}

OptimizationHistory run_optimizer(const StudyConfig& cfg, const SearchSpace& space,
                                  const Objective& objective) {
  cfg.validate();
  if (cfg.method == Method::kRandom) return random_search_minimize(space, objective, cfg.budget, cfg.seed);
  BoOptions opts;
  opts.budget = cfg.budget;
  opts.n_init = cfg.n_init;
  opts.kernel = cfg.kernel;
  opts.gp_restarts = cfg.gp_restarts;
  opts.seed = cfg.seed;
  return bo_minimize(space, objective, opts);
}

StudyOutcome run_study(const StudyConfig& cfg) {
  cfg.validate();
  if (cfg.evaluate && (cfg.test_plus_path.empty() || cfg.test_21_path.empty()))
    throw ValidationError("evaluation needs both 'test_plus' and 'test_21' datasets");
  const auto space = cfg.search_space();
  fs::create_directories(cfg.output_dir);
  write_file_atomic(cfg.output_dir / "study_config.json", cfg.to_json().dump(2) + "\n");

  auto data = prepare_data(cfg, cfg.evaluate);
  write_file_atomic(cfg.output_dir / "dataset_report.json", data.report.to_json().dump(2) + "\n");

  ObjectiveSettings os;
  os.epochs = cfg.epochs;
  os.batch_size = cfg.batch_size;
  os.threshold = cfg.threshold;
  os.base_seed = cfg.seed;
  const auto objective = make_objective(space, data.split.fit.X, data.split.fit.y,
                                        data.split.validation.X, data.split.validation.y, os);
  spdlog::info("{} study: budget {}, seed {}, {} fit / {} validation rows", to_string(cfg.method),
               cfg.budget, cfg.seed, data.split.fit.rows(), data.split.validation.rows());

  StudyOutcome out;
  out.history = run_optimizer(cfg, space, objective);
  out.report = data.report;
  write_history_artifacts(cfg, space, out.history);
  spdlog::info("incumbent: trial {} with validation accuracy {:.4f}", out.history.incumbent_index(),
               -out.history.best_objective());

  if (cfg.evaluate)
    out.results = evaluate_configuration(cfg, out.history.incumbent().cfg, data, cfg.output_dir);
  return out;
}

LandscapeResult emit_landscape(const StudyConfig& cfg, const fs::path& trials_path,
                               const std::string& param_x, const std::string& param_y,
                               std::size_t grid, const fs::path& out_dir) {
  const auto space = cfg.search_space();
  const auto px = numeric_axis(space, param_x);
  const auto py = numeric_axis(space, param_y);
  if (px == py) throw ValidationError("landscape axes must be two different parameters");
  if (grid < 2) throw ValidationError("landscape grid must be at least 2x2");

  const auto history = read_trials(space, trials_path);
  const std::size_t minimum = cfg.method == Method::kBayesian ? cfg.n_init : 1;
  if (history.size() < std::max<std::size_t>(minimum, 1))
    throw ValidationError("landscape needs at least " + std::to_string(minimum) + " trials, log has " +
                          std::to_string(history.size()));

  const auto n = static_cast<Eigen::Index>(history.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(space.encoded_dim()));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = history[static_cast<std::size_t>(i)].encoded.transpose();
    y[i] = history[static_cast<std::size_t>(i)].objective;
  }
  GpFitOptions fo;
  fo.family = cfg.kernel;
  fo.random_restarts = cfg.gp_restarts;
  fo.seed = derive_seed(cfg.seed, kLandscapeStream);
  const auto gp = fit_gp(X, y, fo);

  const auto& inc = history.incumbent();
  const auto ox = static_cast<Eigen::Index>(space.encoded_offset(px));
  const auto oy = static_cast<Eigen::Index>(space.encoded_offset(py));
  const auto& spec_x = space.params()[px];
  const auto& spec_y = space.params()[py];

  LandscapeResult r;
  r.fitness.resize(static_cast<Eigen::Index>(grid), static_cast<Eigen::Index>(grid));
  const double step = 1.0 / static_cast<double>(grid - 1);
  for (std::size_t i = 0; i < grid; ++i) {
    r.x_values.push_back(axis_value(spec_x, static_cast<double>(i) * step));
    r.y_values.push_back(axis_value(spec_y, static_cast<double>(i) * step));
  }
  std::string csv = "x,y,estimated_fitness\n";
  EncodedPoint q = inc.encoded;
  for (std::size_t ix = 0; ix < grid; ++ix) {
    for (std::size_t iy = 0; iy < grid; ++iy) {
      q[ox] = static_cast<double>(ix) * step;
      q[oy] = static_cast<double>(iy) * step;
      const double m = gp.predict(q).mean;
      r.fitness(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(iy)) = m;
      csv += number(r.x_values[ix]) + "," + number(r.y_values[iy]) + "," + number(m) + "\n";
    }
  }
  r.incumbent_ix = static_cast<std::size_t>(std::llround(inc.encoded[ox] / step));
  r.incumbent_iy = static_cast<std::size_t>(std::llround(inc.encoded[oy] / step));

  std::string samples = "x,y,objective,incumbent\n";
  for (const auto& t : history.trials())
    samples += number(axis_value(spec_x, t.encoded[ox])) + "," +
               number(axis_value(spec_y, t.encoded[oy])) + "," + number(t.objective) + "," +
               (t.index == inc.index ? "1" : "0") + "\n";
  write_file_atomic(out_dir / "landscape.csv", csv);
  write_file_atomic(out_dir / "landscape_samples.csv", samples);
  return r;
}

std::string results_csv(const std::vector<DatasetResult>& results) {
  std::string csv = "dataset,accuracy,precision,recall,f1\n";
  for (const auto& r : results)
    csv += r.dataset + "," + percent(r.metrics.accuracy) + "," + percent(r.metrics.precision) + "," +
           percent(r.metrics.recall) + "," + percent(r.metrics.f1) + "\n";
  return csv;
}

std::vector<DatasetResult> evaluate_configuration(const StudyConfig& cfg,
                                                  const Configuration& incumbent,
                                                  const PreparedData& data,
                                                  const fs::path& out_dir) {
  const auto space = cfg.search_space();
  const auto net = network_config_from(space, incumbent);
  nn::TrainSettings ts;
  ts.epochs = cfg.epochs;
  ts.batch_size = cfg.batch_size;
  ts.rng_seed = cfg.eval_seed;
  // split.fit and split.validation together are exactly data.train
  const auto model = nn::train(net, ts, data.train.X, data.train.y);

  std::vector<DatasetResult> results;
  for (const auto& [name, path] : {std::pair{std::string("KDDTest+"), cfg.test_plus_path},
                                   std::pair{std::string("KDDTest-21"), cfg.test_21_path}}) {
    if (path.empty()) throw ValidationError("missing dataset path for " + name);
    nslkdd::TransformReport rep;
    const auto test = nslkdd::transform(data.encoder, nslkdd::parse_file(path), &rep);
    if (test.rows() == 0) throw ValidationError(name + " dataset is empty");
    if (rep.unseen_total > 0)
      spdlog::info("{}: {} unseen categorical values mapped to zero blocks", name, rep.unseen_total);
    if (rep.clipped_values > 0)
      spdlog::info("{}: {} numeric values clipped to [0,1]", name, rep.clipped_values);
    const auto probs = nn::predict_proba(model.params, test.X);
    DatasetResult r{name, metrics(confusion(test.y, probs, cfg.threshold))};
    spdlog::info("{}: accuracy {:.2f} precision {:.2f} recall {:.2f} f1 {:.2f}", name,
                 100 * r.metrics.accuracy, 100 * r.metrics.precision, 100 * r.metrics.recall,
                 100 * r.metrics.f1);
    results.push_back(std::move(r));
  }
  if (results[1].metrics.accuracy > results[0].metrics.accuracy)
    spdlog::warn("KDDTest-21 accuracy exceeds KDDTest+ accuracy; expected the harder subset to score lower");
  write_file_atomic(out_dir / "results.csv", results_csv(results));
  return results;
}

std::vector<DatasetResult> evaluate_incumbent(const StudyConfig& cfg, const fs::path& incumbent_path,
                                              const fs::path& out_dir) {
  const auto space = cfg.search_space();
  const auto j = read_json(incumbent_path);
  if (!j.contains("config")) throw ValidationError("incumbent file has no 'config' object");
  const auto incumbent = space.config_from_json(j.at("config"));
  const auto data = prepare_data(cfg, false);
  return evaluate_configuration(cfg, incumbent, data, out_dir);
}

}  // namespace bayeshpo::study
