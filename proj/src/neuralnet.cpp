#include "bayeshpo/neuralnet.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "bayeshpo/errors.hpp"

namespace bayeshpo::nn {

namespace {

Matrix activate_matrix(Activation kind, const Matrix& z) {
  switch (kind) {
    case Activation::kReLU:
      return z.cwiseMax(0.0);
    case Activation::kSigmoid:
      return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::kTanh:
      return z.array().tanh().matrix();
    case Activation::kLinear:
      return z;
  }
  return z;
}

// d act / d z, evaluated at the pre-activation.
Matrix activation_slope(Activation kind, const Matrix& z) {
  switch (kind) {
    case Activation::kReLU:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::kSigmoid:
      return z.unaryExpr([](double v) {
        const double s = sigmoid(v);
        return s * (1.0 - s);
      });
    case Activation::kTanh:
      return (1.0 - z.array().tanh().square()).matrix();
    case Activation::kLinear:
      return Matrix::Ones(z.rows(), z.cols());
  }
  return z;
}

void check_input(const MLPParams& params, const Matrix& x) {
  if (params.layers.empty()) throw ValidationError("network has no layers");
  if (static_cast<std::size_t>(x.cols()) != params.input_dim())
    throw ValidationError("input has " + std::to_string(x.cols()) + " columns, network expects " +
                          std::to_string(params.input_dim()));
}

std::vector<std::size_t> hidden_sizes(const NetworkConfig& cfg) {
  return std::vector<std::size_t>(static_cast<std::size_t>(cfg.n_hidden_layers),
                                  static_cast<std::size_t>(cfg.n_neurons));
}

void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("truncated snapshot");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("truncated snapshot");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

constexpr char kSnapshotMagic[8] = {'B', 'H', 'P', 'O', 'M', 'L', 'P', '1'};

}  // namespace

Activation activation_from_string(std::string_view name) {
  if (name == "ReLU" || name == "relu") return Activation::kReLU;
  if (name == "sigmoid" || name == "Sigmoid") return Activation::kSigmoid;
  if (name == "TanH" || name == "tanh") return Activation::kTanh;
  if (name == "linear") return Activation::kLinear;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kReLU:
      return "ReLU";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "TanH";
    case Activation::kLinear:
      return "linear";
  }
  return "unknown";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "Adam" || name == "adam") return OptimizerKind::kAdam;
  if (name == "SGD" || name == "sgd") return OptimizerKind::kSGD;
  throw ValidationError("unknown optimizer '" + std::string(name) + "'");
}

std::string to_string(OptimizerKind o) { return o == OptimizerKind::kAdam ? "Adam" : "SGD"; }

std::size_t MLPParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.rows());
}

bool MLPParams::operator==(const MLPParams& other) const {
  if (hidden_activation != other.hidden_activation || layers.size() != other.layers.size())
    return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
        a.weights != b.weights || a.bias != b.bias)
      return false;
  }
  return true;
}

MLPParams MLPParams::zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                           Activation activation) {
  MLPParams p;
  p.hidden_activation = activation;
  std::size_t fan_in = input_dim;
  auto add = [&](std::size_t fan_out) {
    p.layers.push_back({Matrix::Zero(static_cast<Eigen::Index>(fan_in),
                                     static_cast<Eigen::Index>(fan_out)),
                        Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(fan_out))});
    fan_in = fan_out;
  };
  for (auto h : hidden) add(h);
  add(1);
  return p;
}

MLPParams MLPParams::glorot(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                            Activation activation, Rng& rng) {
  auto p = zeros(input_dim, hidden, activation);
  for (auto& layer : p.layers) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        layer.weights(r, c) = (2.0 * unit_uniform(rng) - 1.0) * limit;
  }
  return p;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::kReLU:
      return x > 0.0 ? x : 0.0;
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kLinear:
      return x;
  }
  return x;
}

double bce_loss(double y, double y_hat) {
  const double p = std::clamp(y_hat, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
}

double mean_bce(const Vector& y, const Vector& y_hat) {
  if (y.size() != y_hat.size()) throw ValidationError("mean_bce: length mismatch");
  if (y.size() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) total += bce_loss(y[i], y_hat[i]);
  return total / static_cast<double>(y.size());
}

ForwardResult forward(const MLPParams& params, const Matrix& x, Mode mode, double dropout_rate,
                      Rng* rng) {
  check_input(params, x);
  const bool drop = mode == Mode::kTrain && dropout_rate > 0.0;
  if (drop && !(dropout_rate < 1.0)) throw ValidationError("dropout rate must be < 1");
  if (drop && rng == nullptr) throw ValidationError("train-mode dropout needs an RNG");

  ForwardResult out;
  auto& cache = out.cache;
  cache.mode = mode;
  const double keep = 1.0 - dropout_rate;
  Matrix a = x;
  const auto n_layers = params.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = params.layers[l];
    cache.inputs.push_back(a);
    Matrix z = (a * layer.weights).rowwise() + layer.bias;
    if (l + 1 == n_layers) {
      out.y_hat = z.col(0).unaryExpr([](double v) { return sigmoid(v); });
      cache.pre.push_back(std::move(z));
      break;
    }
    a = activate_matrix(params.hidden_activation, z);
    cache.pre.push_back(std::move(z));
    if (mode == Mode::kTrain) {
      Matrix mask = Matrix::Constant(a.rows(), a.cols(), 1.0);
      if (drop) {
        // column-major fill keeps the draw order fixed for a given shape
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
          for (Eigen::Index r = 0; r < mask.rows(); ++r)
            mask(r, c) = unit_uniform(*rng) < keep ? 1.0 / keep : 0.0;
        a.array() *= mask.array();
      }
      cache.masks.push_back(std::move(mask));
    }
  }
  cache.output = out.y_hat;
  return out;
}

Gradients backward(const MLPParams& params, const ForwardCache& cache, const Vector& y) {
  const auto n_layers = params.layers.size();
  if (cache.inputs.size() != n_layers || cache.pre.size() != n_layers)
    throw ValidationError("backward: cache does not match the network depth");
  if (cache.mode == Mode::kTrain && cache.masks.size() + 1 != n_layers)
    throw ValidationError("backward: cache is missing dropout masks");
  const auto n = cache.output.size();
  if (y.size() != n) throw ValidationError("backward: label count does not match the cache");
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& w = params.layers[l].weights;
    if (cache.inputs[l].cols() != w.rows() || cache.pre[l].cols() != w.cols() ||
        cache.inputs[l].rows() != n)
      throw ValidationError("backward: stale cache (layer " + std::to_string(l) +
                            " shape mismatch)");
  }

  Gradients grads(n_layers);
  // sigmoid output with mean BCE: dL/dz = (y_hat - y) / n
  Matrix dz = (cache.output - y) / static_cast<double>(n);
  for (std::size_t l = n_layers; l-- > 0;) {
    grads[l].weights = cache.inputs[l].transpose() * dz;
    grads[l].bias = dz.colwise().sum();
    if (l == 0) break;
    Matrix da = dz * params.layers[l].weights.transpose();
    if (cache.mode == Mode::kTrain) da.array() *= cache.masks[l - 1].array();
    dz = da.cwiseProduct(activation_slope(params.hidden_activation, cache.pre[l - 1]));
  }
  return grads;
}

void sgd_step(MLPParams& params, const Gradients& grads, double learning_rate) {
  if (grads.size() != params.layers.size()) throw ValidationError("sgd_step: shape mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    params.layers[l].weights -= learning_rate * grads[l].weights;
    params.layers[l].bias -= learning_rate * grads[l].bias;
  }
}

void adam_step(MLPParams& params, const Gradients& grads, AdamState& state, double learning_rate) {
  if (grads.size() != params.layers.size()) throw ValidationError("adam_step: shape mismatch");
  if (state.m.empty()) {
    for (const auto& layer : params.layers) {
      DenseLayer z{Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                   Eigen::RowVectorXd::Zero(layer.bias.size())};
      state.m.push_back(z);
      state.v.push_back(z);
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](auto& w, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    w.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    update(params.layers[l].weights, state.m[l].weights, state.v[l].weights, grads[l].weights);
    update(params.layers[l].bias, state.m[l].bias, state.v[l].bias, grads[l].bias);
  }
}

TrainResult train(const NetworkConfig& cfg, const TrainSettings& settings, const Matrix& x,
                  const Vector& y) {
  if (settings.epochs < 1 || settings.batch_size < 1)
    throw ValidationError("train: epochs and batch_size must be >= 1");
  if (cfg.n_hidden_layers < 1 || cfg.n_neurons < 1)
    throw ValidationError("train: network needs at least one hidden layer and neuron");
  if (x.rows() != y.size() || x.rows() == 0)
    throw ValidationError("train: sample/label count mismatch or empty data");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0) throw ValidationError("train: labels must be 0 or 1");

  Rng rng(settings.rng_seed);
  TrainResult result;
  result.params = MLPParams::glorot(static_cast<std::size_t>(x.cols()), hidden_sizes(cfg),
                                    cfg.activation, rng);
  auto& params = result.params;
  AdamState adam;

  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<std::size_t>(settings.batch_size);

  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      const auto j = std::min(i - 1, static_cast<std::size_t>(unit_uniform(rng) *
                                                              static_cast<double>(i)));
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const auto end = std::min(n, start + batch);
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix xb = x(idx, Eigen::all);
      const Vector yb = y(idx);
      auto fwd = forward(params, xb, Mode::kTrain, cfg.dropout_rate, &rng);
      const double loss = mean_bce(yb, fwd.y_hat);
      if (!std::isfinite(loss))
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(end - start);
      const auto grads = backward(params, fwd.cache, yb);
      if (cfg.optimizer == OptimizerKind::kAdam)
        adam_step(params, grads, adam, cfg.learning_rate);
      else
        sgd_step(params, grads, cfg.learning_rate);
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(n));
  }
  for (const auto& layer : params.layers)
    if (!layer.weights.allFinite() || !layer.bias.allFinite())
      throw NumericalError("training produced non-finite weights");
  return result;
}

Vector predict_proba(const MLPParams& params, const Matrix& x) {
  return forward(params, x, Mode::kEval, 0.0).y_hat;
}

void save_params(const MLPParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path.string() + "' for writing");
  os.write(kSnapshotMagic, sizeof kSnapshotMagic);
  write_u32(os, static_cast<std::uint32_t>(params.hidden_activation));
  write_u32(os, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& layer : params.layers) {
    write_u64(os, static_cast<std::uint64_t>(layer.weights.rows()));
    write_u64(os, static_cast<std::uint64_t>(layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        write_u64(os, std::bit_cast<std::uint64_t>(layer.weights(r, c)));
    for (Eigen::Index c = 0; c < layer.bias.size(); ++c)
      write_u64(os, std::bit_cast<std::uint64_t>(layer.bias[c]));
  }
  if (!os) throw ValidationError("failed writing '" + path.string() + "'");
}

MLPParams load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path.string() + "'");
  char magic[8];
  if (!is.read(magic, 8) || !std::equal(magic, magic + 8, kSnapshotMagic))
    throw ValidationError("'" + path.string() + "' is not a network snapshot");
  MLPParams p;
  const auto act = read_u32(is);
  if (act > static_cast<std::uint32_t>(Activation::kLinear))
    throw ValidationError("snapshot has an unknown activation code");
  p.hidden_activation = static_cast<Activation>(act);
  const auto n_layers = read_u32(is);
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const auto rows = static_cast<Eigen::Index>(read_u64(is));
    const auto cols = static_cast<Eigen::Index>(read_u64(is));
    DenseLayer layer{Matrix(rows, cols), Eigen::RowVectorXd(cols)};
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        layer.weights(r, c) = std::bit_cast<double>(read_u64(is));
    for (Eigen::Index c = 0; c < cols; ++c) layer.bias[c] = std::bit_cast<double>(read_u64(is));
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace bayeshpo::nn
