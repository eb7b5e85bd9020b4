#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bayeshpo/search_space.hpp"

namespace bayeshpo {

enum class KernelFamily { kSquaredExponential, kRationalQuadratic, kMatern52 };

KernelFamily kernel_family_from_string(std::string_view name);
std::string to_string(KernelFamily family);

/// Stationary ARD kernel: one length scale per encoded dimension.
struct KernelSpec {
  KernelFamily family = KernelFamily::kMatern52;
  Eigen::VectorXd length_scales;
  double signal_variance = 1.0;
  double alpha = 1.0;  // rational-quadratic only

  static KernelSpec isotropic(KernelFamily family, std::size_t dim, double length_scale = 1.0,
                              double signal_variance = 1.0);
  void validate(std::size_t dim) const;
};

/// Kernel value as a function of the squared length-scaled distance.
double kernel_from_sqdist(const KernelSpec& k, double r2);
double kernel_eval(const KernelSpec& k, const EncodedPoint& a, const EncodedPoint& b);
/// Gram matrix over the rows of `X` (each row is one point), no jitter.
Eigen::MatrixXd gram_matrix(const KernelSpec& k, const Eigen::MatrixXd& X);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// GP posterior conditioned on standardized targets. Immutable once built.
class FittedGP {
 public:
  /// Conditions on (X, y) with the given hyperparameters; no model selection.
  /// Throws NumericalError if the Gram matrix stays indefinite after jitter escalation.
  static FittedGP condition(Eigen::MatrixXd X, const Eigen::VectorXd& y, KernelSpec kernel,
                            double noise_variance);

  Prediction predict(const EncodedPoint& x) const;
  /// Log marginal likelihood of the standardized targets.
  double log_marginal_likelihood() const;

  const KernelSpec& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& points() const { return X_; }
  const Eigen::VectorXd& standardized_targets() const { return y_; }
  double y_mean() const { return y_mean_; }
  double y_std() const { return y_std_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  const Eigen::VectorXd& alpha_vec() const { return alpha_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }

 private:
  FittedGP() = default;

  KernelSpec kernel_;
  double noise_variance_ = 0.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
};

struct GpFitOptions {
  KernelFamily family = KernelFamily::kMatern52;
  int random_restarts = 5;
  std::uint64_t seed = 0;
  // When set, noise is held at this value instead of being optimized.
  std::optional<double> fixed_noise;
  int max_evals_per_start = 0;  // 0 = 60 * (n_hyperparameters + 1)
};

// Hyperparameter bounds, natural log scale.
inline constexpr double kLogLengthScaleMin = -4.605170185988091;  // log 0.01
inline constexpr double kLogLengthScaleMax = 2.302585092994046;   // log 10
inline constexpr double kLogNoiseMin = -18.420680743952367;       // log 1e-8
inline constexpr double kLogNoiseMax = 0.0;                       // log 1
inline constexpr double kLogSignalMin = -4.605170185988091;       // log 0.01
inline constexpr double kLogSignalMax = 4.605170185988091;        // log 100

/// Selects kernel hyperparameters and noise by maximizing the log marginal likelihood
/// (Nelder-Mead over log parameters, one default start plus random restarts) and
/// returns the conditioned posterior.
FittedGP fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const GpFitOptions& options = {});
FittedGP fit_gp(const std::vector<EncodedPoint>& X, const Eigen::VectorXd& y,
                const GpFitOptions& options = {});

}  // namespace bayeshpo
