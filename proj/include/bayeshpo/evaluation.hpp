#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bayeshpo/neuralnet.hpp"
#include "bayeshpo/optimizer.hpp"
#include "bayeshpo/search_space.hpp"

namespace bayeshpo {

/// Attack (label 1) is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Fractions in [0,1]. A metric whose denominator is zero is reported as 0 and flagged.
struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

inline constexpr double kDefaultThreshold = 0.5;

/// Predicted positive iff probability >= threshold.
ConfusionMatrix confusion(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_prob,
                          double threshold = kDefaultThreshold);
MetricsReport metrics(const ConfusionMatrix& cm);

/// Reads the six DNN hyperparameters by name.
nn::NetworkConfig network_config_from(const SearchSpace& space, const Configuration& cfg);

struct ObjectiveSettings {
  int epochs = 10;
  int batch_size = 256;
  double threshold = kDefaultThreshold;
  std::uint64_t base_seed = 0;
};

/// Fitness = -(validation accuracy) of a network trained on `train_fit`.
/// The matrices are shared, not copied; they must outlive the returned objective.
Objective make_objective(const SearchSpace& space, const Eigen::MatrixXd& fit_x,
                         const Eigen::VectorXd& fit_y, const Eigen::MatrixXd& val_x,
                         const Eigen::VectorXd& val_y, const ObjectiveSettings& settings);

}  // namespace bayeshpo
