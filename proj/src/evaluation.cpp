#include "bayeshpo/evaluation.hpp"

#include <memory>

#include "bayeshpo/errors.hpp"
#include "bayeshpo/rng.hpp"

namespace bayeshpo {

ConfusionMatrix confusion(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_prob,
                          double threshold) {
  if (y_true.size() != y_prob.size())
    throw ValidationError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                          std::to_string(y_prob.size()) + " probabilities");
  ConfusionMatrix cm;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const bool actual = y_true[i] != 0.0;
    const bool predicted = y_prob[i] >= threshold;
    if (actual && predicted) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (predicted) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("metrics: empty confusion matrix");
  MetricsReport r;
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  r.accuracy = d(cm.tp + cm.tn) / d(cm.total());
  if (cm.tp + cm.fp == 0) r.precision_undefined = true;
  else r.precision = d(cm.tp) / d(cm.tp + cm.fp);
  if (cm.tp + cm.fn == 0) r.recall_undefined = true;
  else r.recall = d(cm.tp) / d(cm.tp + cm.fn);
  if (r.precision_undefined || r.recall_undefined || r.precision + r.recall == 0.0)
    r.f1_undefined = true;
  else r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

nn::NetworkConfig network_config_from(const SearchSpace& space, const Configuration& cfg) {
  space.validate(cfg);
  auto get = [&](const char* name) -> const ParamValue& {
    return cfg.values[space.index_of(name)];
  };
  auto as_int = [&](const char* name) {
    const auto* v = std::get_if<std::int64_t>(&get(name));
    if (!v) throw ValidationError(std::string("parameter '") + name + "' must be an integer");
    return static_cast<int>(*v);
  };
  auto as_real = [&](const char* name) {
    const auto* v = std::get_if<double>(&get(name));
    if (!v) throw ValidationError(std::string("parameter '") + name + "' must be real");
    return *v;
  };
  auto as_label = [&](const char* name) {
    const auto* v = std::get_if<std::string>(&get(name));
    if (!v) throw ValidationError(std::string("parameter '") + name + "' must be categorical");
    return *v;
  };
  nn::NetworkConfig n;
  n.n_hidden_layers = as_int("n_hidden_layers");
  n.n_neurons = as_int("n_neurons");
  n.dropout_rate = as_real("dropout_rate");
  n.activation = nn::activation_from_string(as_label("activation"));
  n.optimizer = nn::optimizer_from_string(as_label("optimizer"));
  n.learning_rate = as_real("learning_rate");
  return n;
}

Objective make_objective(const SearchSpace& space, const Eigen::MatrixXd& fit_x,
                         const Eigen::VectorXd& fit_y, const Eigen::MatrixXd& val_x,
                         const Eigen::VectorXd& val_y, const ObjectiveSettings& settings) {
  if (fit_x.cols() != val_x.cols())
    throw ValidationError("make_objective: fit and validation matrices have different widths");
  if (fit_x.rows() != fit_y.size() || val_x.rows() != val_y.size() || val_y.size() == 0)
    throw ValidationError("make_objective: inconsistent matrix/label sizes");
  return [space, &fit_x, &fit_y, &val_x, &val_y, settings](const Configuration& cfg,
                                                           std::uint64_t trial_seed) {
    const auto net = network_config_from(space, cfg);
    nn::TrainSettings ts;
    ts.epochs = settings.epochs;
    ts.batch_size = settings.batch_size;
    ts.rng_seed = derive_seed(settings.base_seed, trial_seed);
    const auto model = nn::train(net, ts, fit_x, fit_y);
    const auto probs = nn::predict_proba(model.params, val_x);
    return -metrics(confusion(val_y, probs, settings.threshold)).accuracy;
  };
}

}  // namespace bayeshpo
