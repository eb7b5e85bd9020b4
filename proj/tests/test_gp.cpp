#include "bayeshpo/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "bayeshpo/errors.hpp"
#include "support/gp_oracle.hpp"

namespace bayeshpo {
namespace {

const KernelFamily kFamilies[] = {KernelFamily::kSquaredExponential,
                                  KernelFamily::kRationalQuadratic, KernelFamily::kMatern52};

Eigen::MatrixXd random_points(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = unit_uniform(rng);
  return X;
}

KernelSpec random_kernel(Rng& rng, KernelFamily family, Eigen::Index d) {
  KernelSpec k;
  k.family = family;
  k.length_scales.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) k.length_scales[j] = 0.2 + 0.8 * unit_uniform(rng);
  k.signal_variance = 0.5 + unit_uniform(rng);
  return k;
}

TEST(Kernel, ValueAtZeroDistanceIsSignalVariance) {
  Rng rng(1);
  for (auto fam : kFamilies) {
    auto k = random_kernel(rng, fam, 3);
    const EncodedPoint a = random_points(rng, 1, 3).row(0).transpose();
    EXPECT_DOUBLE_EQ(kernel_eval(k, a, a), k.signal_variance);
  }
}

TEST(Kernel, SquaredExponentialClosedForm) {
  auto k = KernelSpec::isotropic(KernelFamily::kSquaredExponential, 2);
  EncodedPoint a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 1.0;  // r^2 = 2
  EXPECT_NEAR(kernel_eval(k, a, b), 0.36787944117144233, 1e-15);
}

TEST(Kernel, MaternAndRationalQuadraticClosedForm) {
  EncodedPoint a(1), b(1);
  a << 0.0;
  b << 1.0;
  const double s5 = std::sqrt(5.0);
  EXPECT_NEAR(kernel_eval(KernelSpec::isotropic(KernelFamily::kMatern52, 1), a, b),
              (1.0 + s5 + 5.0 / 3.0) * std::exp(-s5), 1e-14);
  EXPECT_NEAR(kernel_eval(KernelSpec::isotropic(KernelFamily::kRationalQuadratic, 1), a, b),
              1.0 / 1.5, 1e-14);
}

TEST(Kernel, Symmetry) {
  Rng rng(2);
  for (auto fam : kFamilies) {
    auto k = random_kernel(rng, fam, 4);
    for (int i = 0; i < 100; ++i) {
      const auto P = random_points(rng, 2, 4);
      EXPECT_EQ(kernel_eval(k, P.row(0).transpose(), P.row(1).transpose()),
                kernel_eval(k, P.row(1).transpose(), P.row(0).transpose()));
    }
  }
}

TEST(Kernel, RejectsBadInput) {
  auto k = KernelSpec::isotropic(KernelFamily::kMatern52, 2);
  EXPECT_THROW(kernel_eval(k, EncodedPoint::Zero(2), EncodedPoint::Zero(3)), ValidationError);
  EXPECT_THROW(k.validate(3), ValidationError);
  k.length_scales[1] = 0.0;
  EXPECT_THROW(k.validate(2), ValidationError);
  EXPECT_THROW(kernel_family_from_string("periodic"), ValidationError);
  EXPECT_EQ(kernel_family_from_string("matern-5/2"), KernelFamily::kMatern52);
  EXPECT_EQ(kernel_family_from_string("se"), KernelFamily::kSquaredExponential);
}

TEST(Kernel, GramMatrixIsPositiveSemidefinite) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto n = 1 + static_cast<Eigen::Index>(unit_uniform(rng) * 10);
    const auto X = random_points(rng, n, 3);
    for (auto fam : kFamilies) {
      const auto K = gram_matrix(random_kernel(rng, fam, 3), X);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
    }
  }
}

TEST(GP, SinglePointInterpolation) {
  Eigen::MatrixXd X(1, 2);
  X << 0.3, 0.7;
  Eigen::VectorXd y(1);
  y << 2.5;
  GpFitOptions opts;
  opts.fixed_noise = 0.0;
  const auto gp = fit_gp(X, y, opts);
  const auto p = gp.predict(X.row(0).transpose());
  EXPECT_NEAR(p.mean, 2.5, 1e-12);
  EXPECT_LE(p.variance, 1e-8);
}

TEST(GP, ConstantTargets) {
  Rng rng(4);
  const auto X = random_points(rng, 5, 2);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(5, -0.75);
  const auto gp = fit_gp(X, y);
  EXPECT_EQ(gp.y_std(), 1.0);
  for (int i = 0; i < 20; ++i) {
    const EncodedPoint q = random_points(rng, 1, 2).row(0).transpose();
    EXPECT_NEAR(gp.predict(q).mean, -0.75, 1e-6);
  }
}

TEST(GP, SineRegressionMatchesTruthAndOracle) {
  Eigen::MatrixXd X(8, 1);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) {
    X(i, 0) = i / 7.0;
    y[i] = std::sin(3.0 * X(i, 0));
  }
  const auto gp = fit_gp(X, y);
  const testing::ExplicitInverseGp oracle(gp);
  for (int i = 0; i < 7; ++i) {
    EncodedPoint q(1);
    q << (i + 0.5) / 7.0;
    const auto p = gp.predict(q);
    EXPECT_NEAR(p.mean, std::sin(3.0 * q[0]), 0.05) << q[0];
    EXPECT_NEAR(p.mean, oracle.predict(q).mean, 1e-6);
  }
}

TEST(GP, InterpolatesTrainingPointsWithoutNoise) {
  Rng rng(5);
  const auto X = random_points(rng, 6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) y[i] = std::cos(4 * X(i, 0)) + X(i, 1);
  const auto gp = FittedGP::condition(X, y, KernelSpec::isotropic(KernelFamily::kMatern52, 2, 0.3), 0.0);
  for (int i = 0; i < 6; ++i) {
    const auto p = gp.predict(X.row(i).transpose());
    EXPECT_NEAR(p.mean, y[i], 1e-6);
    EXPECT_LE(p.variance, 1e-6);
  }
}

TEST(GP, RevertsToPriorFarFromData) {
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 0.02, 0.04;
  Eigen::VectorXd y(3);
  y << 1.0, 3.0, 2.0;
  const auto gp = FittedGP::condition(X, y, KernelSpec::isotropic(KernelFamily::kMatern52, 1, 0.01, 1.7), 1e-6);
  EncodedPoint q(1);
  q << 1.0;
  const auto p = gp.predict(q);
  EXPECT_NEAR(p.mean, gp.y_mean(), 1e-9);
  EXPECT_NEAR(p.variance, 1.7 * gp.y_std() * gp.y_std(), 1e-9);
}

TEST(GP, CholeskyEqualsExplicitInverseOnRandomProblems) {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const auto n = 1 + static_cast<Eigen::Index>(unit_uniform(rng) * 20);
    const auto d = 1 + static_cast<Eigen::Index>(unit_uniform(rng) * 6);
    const auto X = random_points(rng, n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = std::sin(5 * X(i, 0)) + 0.1 * unit_uniform(rng);
    const auto gp = FittedGP::condition(X, y, random_kernel(rng, kFamilies[t % 3], d), 1e-3);
    const testing::ExplicitInverseGp oracle(gp);
    for (int q = 0; q < 20; ++q) {
      const EncodedPoint x = random_points(rng, 1, d).row(0).transpose();
      const auto a = gp.predict(x);
      const auto b = oracle.predict(x);
      EXPECT_NEAR(a.mean, b.mean, 1e-6);
      EXPECT_NEAR(a.variance, b.variance, 1e-6);
      EXPECT_GE(a.variance, 0.0);
    }
  }
}

TEST(GP, CholeskyReconstructsGram) {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    const auto X = random_points(rng, 12, 3);
    Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(12, [&] { return unit_uniform(rng); });
    GpFitOptions opts;
    opts.seed = static_cast<std::uint64_t>(t);
    opts.family = kFamilies[t % 3];
    const auto gp = fit_gp(X, y, opts);
    Eigen::MatrixXd A = gram_matrix(gp.kernel(), X);
    A.diagonal().array() += gp.noise_variance() + gp.jitter();
    const Eigen::MatrixXd L = gp.cholesky();
    EXPECT_LE((L * L.transpose() - A).norm() / A.norm(), 1e-8);
    EXPECT_TRUE(L.isLowerTriangular());
  }
}

TEST(GP, FittedHyperparametersRespectBounds) {
  Rng rng(8);
  const auto X = random_points(rng, 10, 3);
  Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(10, [&] { return unit_uniform(rng); });
  const auto gp = fit_gp(X, y);
  for (Eigen::Index j = 0; j < 3; ++j) {
    EXPECT_GE(std::log(gp.kernel().length_scales[j]), kLogLengthScaleMin - 1e-12);
    EXPECT_LE(std::log(gp.kernel().length_scales[j]), kLogLengthScaleMax + 1e-12);
  }
  EXPECT_GE(std::log(gp.noise_variance()), kLogNoiseMin - 1e-12);
  EXPECT_LE(std::log(gp.noise_variance()), kLogNoiseMax + 1e-12);
}

TEST(GP, FitIsDeterministicForSeed) {
  Rng rng(9);
  const auto X = random_points(rng, 9, 2);
  Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(9, [&] { return unit_uniform(rng); });
  GpFitOptions opts;
  opts.seed = 17;
  const auto a = fit_gp(X, y, opts);
  const auto b = fit_gp(X, y, opts);
  EXPECT_EQ(a.kernel().length_scales, b.kernel().length_scales);
  EXPECT_EQ(a.noise_variance(), b.noise_variance());
}

TEST(GP, LogMarginalLikelihoodSinglePoint) {
  Eigen::MatrixXd X(1, 1);
  X << 0.5;
  Eigen::VectorXd y(1);
  y << 0.0;
  const auto gp = FittedGP::condition(X, y, KernelSpec::isotropic(KernelFamily::kMatern52, 1), 0.0);
  EXPECT_DOUBLE_EQ(gp.jitter(), 1e-10);
  EXPECT_NEAR(gp.log_marginal_likelihood(),
              -0.5 * std::log1p(1e-10) - 0.5 * std::log(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(gp.log_marginal_likelihood(), -0.9189385332546727, 1e-9);
}

TEST(GP, LogMarginalLikelihoodMatchesDeterminantOracle) {
  Rng rng(10);
  for (int t = 0; t < 10; ++t) {
    const auto X = random_points(rng, 5, 2);
    Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(5, [&] { return unit_uniform(rng); });
    const auto gp = FittedGP::condition(X, y, random_kernel(rng, kFamilies[t % 3], 2), 0.01);
    Eigen::MatrixXd A = gram_matrix(gp.kernel(), X);
    A.diagonal().array() += gp.noise_variance() + gp.jitter();
    const auto& ys = gp.standardized_targets();
    const double oracle = -0.5 * ys.dot(A.inverse() * ys) - 0.5 * std::log(A.determinant()) -
                          2.5 * std::log(2 * std::numbers::pi);
    EXPECT_NEAR(gp.log_marginal_likelihood(), oracle, 1e-8);
  }
}

TEST(GP, NoiseImprovesLikelihoodOnPureNoise) {
  Rng rng(11);
  std::normal_distribution<double> normal;
  const auto X = random_points(rng, 15, 1);
  Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(15, [&] { return normal(rng); });
  const auto k = KernelSpec::isotropic(KernelFamily::kMatern52, 1, 0.3);
  const auto clean = FittedGP::condition(X, y, k, 0.0);
  const auto noisy = FittedGP::condition(X, y, k, 1.0);
  EXPECT_GT(noisy.log_marginal_likelihood(), clean.log_marginal_likelihood());
}

TEST(GP, ErrorPaths) {
  EXPECT_THROW(fit_gp(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), ValidationError);
  EXPECT_THROW(fit_gp(std::vector<EncodedPoint>{}, Eigen::VectorXd(0)), ValidationError);
  EXPECT_THROW(fit_gp(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2)), ValidationError);
  Eigen::MatrixXd X(2, 1);
  X << 0.1, 0.9;
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  const auto gp = fit_gp(X, y);
  EXPECT_THROW(gp.predict(EncodedPoint::Zero(2)), ValidationError);
  X(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(FittedGP::condition(X, y, KernelSpec::isotropic(KernelFamily::kMatern52, 1), 0.0),
               NumericalError);
}

}  // namespace
}  // namespace bayeshpo
