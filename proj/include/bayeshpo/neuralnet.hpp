#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bayeshpo/rng.hpp"

namespace bayeshpo::nn {

// kLinear is not part of any search space; it exists for diagnostics such as
// checking the dropout expectation on a linear network.
enum class Activation { kReLU, kSigmoid, kTanh, kLinear };
enum class OptimizerKind { kAdam, kSGD };

Activation activation_from_string(std::string_view name);
std::string to_string(Activation a);
OptimizerKind optimizer_from_string(std::string_view name);
std::string to_string(OptimizerKind o);

struct NetworkConfig {
  int n_hidden_layers = 1;
  int n_neurons = 10;
  double dropout_rate = 0.1;
  Activation activation = Activation::kReLU;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
};

struct TrainSettings {
  int epochs = 10;
  int batch_size = 256;
  std::uint64_t rng_seed = 0;
};

using Matrix = Eigen::MatrixXd;  // rows are samples
using Vector = Eigen::VectorXd;

struct DenseLayer {
  Matrix weights;            // fan_in x fan_out
  Eigen::RowVectorXd bias;   // fan_out
};

/// Dense network input_dim -> n_neurons^(layers) -> 1 with a sigmoid output unit.
struct MLPParams {
  std::vector<DenseLayer> layers;
  Activation hidden_activation = Activation::kReLU;

  std::size_t input_dim() const;
  bool operator==(const MLPParams& other) const;

  static MLPParams zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         Activation activation);
  /// Glorot-uniform weights, zero biases.
  static MLPParams glorot(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                          Activation activation, Rng& rng);
};

using Gradients = std::vector<DenseLayer>;

double activate(Activation kind, double x);
double sigmoid(double x);

inline constexpr double kProbabilityClamp = 1e-7;

/// Binary cross-entropy of a single prediction (clamped to [eps, 1-eps]).
double bce_loss(double y, double y_hat);
double mean_bce(const Vector& y, const Vector& y_hat);

enum class Mode { kTrain, kEval };

struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activations of each layer
  std::vector<Matrix> masks;   // scaled dropout masks per hidden layer (train mode only)
  Vector output;
  Mode mode = Mode::kEval;
};

struct ForwardResult {
  Vector y_hat;
  ForwardCache cache;
};

/// Train mode applies inverted dropout after every hidden activation; `rng` is
/// required only then.
ForwardResult forward(const MLPParams& params, const Matrix& x, Mode mode, double dropout_rate,
                      Rng* rng = nullptr);

/// Exact gradients of the mean BCE with respect to every weight and bias.
Gradients backward(const MLPParams& params, const ForwardCache& cache, const Vector& y);

void sgd_step(MLPParams& params, const Gradients& grads, double learning_rate);

struct AdamState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update; advances state.step first. Zero state is
/// allocated lazily on the first call.
void adam_step(MLPParams& params, const Gradients& grads, AdamState& state, double learning_rate);

struct TrainResult {
  MLPParams params;
  std::vector<double> epoch_losses;  // mean training loss per epoch
};

/// Shuffled mini-batch training. Throws NumericalError on a non-finite loss.
TrainResult train(const NetworkConfig& cfg, const TrainSettings& settings, const Matrix& x,
                  const Vector& y);

Vector predict_proba(const MLPParams& params, const Matrix& x);

/// Binary snapshot: "BHPOMLP1", u32 activation, u32 layer count, then per layer
/// u64 fan_in, u64 fan_out, row-major weights and the bias, all little-endian f64.
void save_params(const MLPParams& params, const std::filesystem::path& path);
MLPParams load_params(const std::filesystem::path& path);

}  // namespace bayeshpo::nn
