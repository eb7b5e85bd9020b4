#include "bayeshpo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include "bayeshpo/errors.hpp"
#include "bayeshpo/nelder_mead.hpp"
#include "bayeshpo/rng.hpp"

namespace bayeshpo {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;
constexpr double kStdFloor = 1e-12;
constexpr double kDefaultLogLength = -0.6931471805599453;  // log 0.5
constexpr double kDefaultLogNoise = -6.907755278982137;    // log 1e-3

// Squared scaled distances between the rows of A and B.
Eigen::MatrixXd scaled_sqdist(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::VectorXd a2 = A.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = B.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * A * B.transpose()).colwise() + a2;
  d.rowwise() += b2.transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd scale_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& length_scales) {
  return X * length_scales.cwiseInverse().asDiagonal();
}

Eigen::MatrixXd apply_kernel(const KernelSpec& k, Eigen::MatrixXd r2) {
  return r2.unaryExpr([&](double v) { return kernel_from_sqdist(k, v); });
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  bool ok = false;
};

// Jitter escalates from 1e-10 to 1e-4 (relative to the signal variance) on failure.
Factorization factorize(const Eigen::MatrixXd& K, double noise, double signal_variance) {
  Factorization out;
  const auto n = K.rows();
  for (double rel = kJitterStart; rel <= kJitterMax * 1.0000001; rel *= 10.0) {
    out.jitter = rel * signal_variance;
    Eigen::MatrixXd A = K;
    A.diagonal().array() += noise + out.jitter;
    out.llt.compute(A);
    if (out.llt.info() == Eigen::Success) {
      const auto& L = out.llt.matrixLLT();
      bool finite_positive = true;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i))) finite_positive = false;
      if (finite_positive) {
        out.ok = true;
        return out;
      }
    }
  }
  return out;
}

double lml_from(const Factorization& f, const Eigen::VectorXd& y) {
  const Eigen::VectorXd alpha = f.llt.solve(y);
  const auto& L = f.llt.matrixLLT();
  double logdet_half = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) logdet_half += std::log(L(i, i));
  return -0.5 * y.dot(alpha) - logdet_half -
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

struct Standardized {
  Eigen::VectorXd y;
  double mean = 0.0;
  double std = 1.0;
};

Standardized standardize(const Eigen::VectorXd& y) {
  Standardized s;
  s.mean = y.mean();
  const double var = (y.array() - s.mean).square().mean();
  s.std = std::sqrt(var);
  if (!(s.std >= kStdFloor)) s.std = 1.0;
  s.y = (y.array() - s.mean) / s.std;
  return s;
}

}  // namespace

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "matern52" || name == "matern-5/2") return KernelFamily::kMatern52;
  if (name == "squared-exponential" || name == "se" || name == "rbf")
    return KernelFamily::kSquaredExponential;
  if (name == "rational-quadratic" || name == "rq") return KernelFamily::kRationalQuadratic;
  throw ValidationError("unknown kernel family '" + std::string(name) + "'");
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kMatern52:
      return "matern52";
    case KernelFamily::kSquaredExponential:
      return "squared-exponential";
    case KernelFamily::kRationalQuadratic:
      return "rational-quadratic";
  }
  return "unknown";
}

KernelSpec KernelSpec::isotropic(KernelFamily family, std::size_t dim, double length_scale,
                                 double signal_variance) {
  KernelSpec k;
  k.family = family;
  k.length_scales = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), length_scale);
  k.signal_variance = signal_variance;
  return k;
}

void KernelSpec::validate(std::size_t dim) const {
  if (static_cast<std::size_t>(length_scales.size()) != dim)
    throw ValidationError("kernel has " + std::to_string(length_scales.size()) +
                          " length scales, points have dimension " + std::to_string(dim));
  if (!(length_scales.array() > 0.0).all() || !(signal_variance > 0.0) || !(alpha > 0.0))
    throw ValidationError("kernel parameters must be strictly positive");
}

double kernel_from_sqdist(const KernelSpec& k, double r2) {
  switch (k.family) {
    case KernelFamily::kSquaredExponential:
      return k.signal_variance * std::exp(-0.5 * r2);
    case KernelFamily::kRationalQuadratic:
      return k.signal_variance * std::pow(1.0 + r2 / (2.0 * k.alpha), -k.alpha);
    case KernelFamily::kMatern52: {
      const double s5r = std::sqrt(5.0 * r2);
      return k.signal_variance * (1.0 + s5r + 5.0 * r2 / 3.0) * std::exp(-s5r);
    }
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& k, const EncodedPoint& a, const EncodedPoint& b) {
  if (a.size() != b.size()) throw ValidationError("kernel_eval: point dimensions differ");
  k.validate(static_cast<std::size_t>(a.size()));
  const double r2 = (a - b).cwiseQuotient(k.length_scales).squaredNorm();
  return kernel_from_sqdist(k, r2);
}

Eigen::MatrixXd gram_matrix(const KernelSpec& k, const Eigen::MatrixXd& X) {
  k.validate(static_cast<std::size_t>(X.cols()));
  const Eigen::MatrixXd Xs = scale_rows(X, k.length_scales);
  Eigen::MatrixXd K = apply_kernel(k, scaled_sqdist(Xs, Xs));
  K.diagonal().setConstant(k.signal_variance);
  // exact symmetry
  K = 0.5 * (K + K.transpose()).eval();
  return K;
}

FittedGP FittedGP::condition(Eigen::MatrixXd X, const Eigen::VectorXd& y, KernelSpec kernel,
                             double noise_variance) {
  if (X.rows() == 0) throw ValidationError("GP needs at least one observation");
  if (X.rows() != y.size()) throw ValidationError("GP: |X| != |y|");
  if (!y.allFinite()) throw ValidationError("GP: targets must be finite");
  if (!(noise_variance >= 0.0)) throw ValidationError("GP: noise variance must be >= 0");
  kernel.validate(static_cast<std::size_t>(X.cols()));

  FittedGP gp;
  const auto s = standardize(y);
  gp.y_ = s.y;
  gp.y_mean_ = s.mean;
  gp.y_std_ = s.std;
  gp.kernel_ = std::move(kernel);
  gp.noise_variance_ = noise_variance;

  const auto K = gram_matrix(gp.kernel_, X);
  auto f = factorize(K, noise_variance, gp.kernel_.signal_variance);
  if (!f.ok)
    throw NumericalError("Cholesky failed after jitter escalation to " +
                         std::to_string(kJitterMax) + " x signal variance");
  gp.jitter_ = f.jitter;
  gp.chol_ = f.llt.matrixL();
  gp.alpha_ = f.llt.solve(gp.y_);
  gp.X_ = std::move(X);
  return gp;
}

Prediction FittedGP::predict(const EncodedPoint& x) const {
  if (x.size() != X_.cols())
    throw ValidationError("predict: query has dimension " + std::to_string(x.size()) +
                          ", GP has " + std::to_string(X_.cols()));
  Eigen::VectorXd kstar(X_.rows());
  const Eigen::VectorXd xs = x.cwiseQuotient(kernel_.length_scales);
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    const double r2 =
        (X_.row(i).transpose().cwiseQuotient(kernel_.length_scales) - xs).squaredNorm();
    kstar[i] = kernel_from_sqdist(kernel_, r2);
  }
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kstar);
  Prediction p;
  p.mean = y_mean_ + y_std_ * kstar.dot(alpha_);
  p.variance = std::max(0.0, kernel_.signal_variance - v.squaredNorm()) * y_std_ * y_std_;
  return p;
}

double FittedGP::log_marginal_likelihood() const {
  double logdet_half = 0.0;
  for (Eigen::Index i = 0; i < chol_.rows(); ++i) logdet_half += std::log(chol_(i, i));
  return -0.5 * y_.dot(alpha_) - logdet_half -
         0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi);
}

FittedGP fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpFitOptions& options) {
  if (X.rows() == 0) throw ValidationError("GP needs at least one observation");
  if (X.rows() != y.size()) throw ValidationError("GP: |X| != |y|");
  if (!y.allFinite()) throw ValidationError("GP: targets must be finite");

  const auto d = X.cols();
  const bool learn_noise = !options.fixed_noise.has_value();
  const Eigen::Index n_params = d + 1 + (learn_noise ? 1 : 0);
  const auto s = standardize(y);

  Eigen::VectorXd lo(n_params), hi(n_params);
  lo.head(d).setConstant(kLogLengthScaleMin);
  hi.head(d).setConstant(kLogLengthScaleMax);
  lo[d] = kLogSignalMin;
  hi[d] = kLogSignalMax;
  if (learn_noise) {
    lo[d + 1] = kLogNoiseMin;
    hi[d + 1] = kLogNoiseMax;
  }

  auto unpack = [&](const Eigen::VectorXd& theta, KernelSpec& k, double& noise) {
    const Eigen::VectorXd t = theta.cwiseMax(lo).cwiseMin(hi);
    k.family = options.family;
    k.length_scales = t.head(d).array().exp();
    k.signal_variance = std::exp(t[d]);
    noise = learn_noise ? std::exp(t[d + 1]) : *options.fixed_noise;
  };

  KernelSpec k;
  double noise = 0.0;
  auto negative_lml = [&](const Eigen::VectorXd& theta) {
    unpack(theta, k, noise);
    const Eigen::MatrixXd Xs = scale_rows(X, k.length_scales);
    Eigen::MatrixXd K = apply_kernel(k, scaled_sqdist(Xs, Xs));
    K.diagonal().setConstant(k.signal_variance);
    const auto f = factorize(K, noise, k.signal_variance);
    if (!f.ok) return std::numeric_limits<double>::infinity();
    return -lml_from(f, s.y);
  };

  const int max_evals = options.max_evals_per_start > 0
                            ? options.max_evals_per_start
                            : 60 * static_cast<int>(n_params + 1);

  Eigen::VectorXd start(n_params);
  start.head(d).setConstant(kDefaultLogLength);
  start[d] = 0.0;
  if (learn_noise) start[d + 1] = kDefaultLogNoise;

  Rng rng(options.seed);
  Eigen::VectorXd best_theta = start;
  double best_value = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart <= options.random_restarts; ++restart) {
    if (restart > 0)
      for (Eigen::Index i = 0; i < n_params; ++i)
        start[i] = lo[i] + unit_uniform(rng) * (hi[i] - lo[i]);
    const auto r = detail::nelder_mead(negative_lml, start, 0.5, max_evals);
    if (r.value < best_value) {
      best_value = r.value;
      best_theta = r.x;
    }
  }
  if (!std::isfinite(best_value))
    throw NumericalError("GP hyperparameter search found no positive-definite candidate");

  unpack(best_theta, k, noise);
  spdlog::debug("gp fit: n={} d={} signal={:.4g} noise={:.3g} lml={:.4f}", X.rows(), d,
                k.signal_variance, noise, -best_value);
  return FittedGP::condition(X, y, k, noise);
}

FittedGP fit_gp(const std::vector<EncodedPoint>& X, const Eigen::VectorXd& y,
                const GpFitOptions& options) {
  if (X.empty()) throw ValidationError("GP needs at least one observation");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(X.size()), X.front().size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != M.cols()) throw ValidationError("GP: inconsistent point dimensions");
    M.row(static_cast<Eigen::Index>(i)) = X[i].transpose();
  }
  return fit_gp(M, y, options);
}

}  // namespace bayeshpo
