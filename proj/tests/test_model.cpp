#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "logitmc/model.hpp"
#include "test_support.hpp"

namespace {

using namespace logitmc;
using testing_support::naive_log_likelihood;
using testing_support::random_beta;
using testing_support::random_dataset;

TEST(LinearPredictor, ZeroBetaGivesZero) {
  const Dataset d = random_dataset(7, 3, 1);
  EXPECT_TRUE(linear_predictor(Beta::Zero(3), d).isZero(0.0));
}

TEST(LinearPredictor, OrthogonalRow) {
  RowMatrix X(1, 2);
  X << 1.0, 2.0;
  const Dataset d(X, {1});
  const Vector theta = linear_predictor((Beta(2) << 0.5, -0.25).finished(), d);
  EXPECT_EQ(theta[0], 0.0);
}

TEST(LinearPredictor, MatchesNaiveDotProduct) {
  const Dataset d = random_dataset(3, 2, 11);
  const Beta b = random_beta(2, 12);
  const Vector theta = linear_predictor(b, d, {0, 3});
  for (Eigen::Index i = 0; i < 3; ++i) {
    double dot = 0.0;
    for (Eigen::Index j = 0; j < 2; ++j) dot += d.X()(i, j) * b[j];
    EXPECT_NEAR(theta[i], dot, 1e-12);
  }
  const Vector middle = linear_predictor(b, d, {1, 3});
  ASSERT_EQ(middle.size(), 2);
  EXPECT_EQ(middle[0], theta[1]);
}

TEST(LinearPredictor, RejectsBadInput) {
  const Dataset d = random_dataset(5, 2, 3);
  EXPECT_THROW(linear_predictor(Beta::Zero(3), d), DataError);
  EXPECT_THROW(linear_predictor(Beta::Zero(2), d, {2, 6}), DataError);
}

TEST(Softplus, ReferenceValues) {
  EXPECT_DOUBLE_EQ(softplus(0.0), std::log(2.0));
  EXPECT_NEAR(softplus(0.0), 0.6931471805599453, 1e-16);
  EXPECT_NEAR(softplus(50.0), 50.0, 50.0 * 1e-15);
  EXPECT_NEAR(softplus(-3.0), 0.048587351573742, 1e-12);
  EXPECT_TRUE(std::isfinite(softplus(1e300)));
  EXPECT_EQ(softplus(1e300), 1e300);
  EXPECT_EQ(softplus(-1e300), 0.0);
}

TEST(Softplus, SymmetryIdentityHoldsAcrossRange) {
  for (double t = -745.0; t <= 745.0; t += 0.37) {
    const double a = softplus(t), b = softplus(-t);
    ASSERT_TRUE(std::isfinite(a) && std::isfinite(b)) << t;
    ASSERT_NEAR(a - b, t, 1e-12) << t;
  }
}

TEST(ExactLogLikelihood, ZeroBeta) {
  const Dataset d = random_dataset(37, 4, 5);
  EXPECT_NEAR(exact_log_likelihood(Beta::Zero(4), d), -37.0 * std::log(2.0), 1e-12);
}

TEST(ExactLogLikelihood, TwoRowExample) {
  RowMatrix X(2, 1);
  X << 1.0, 1.0;
  const Dataset d(X, {1, 0});
  EXPECT_NEAR(exact_log_likelihood((Beta(1) << 1.0).finished(), d), -1.6265233750364456, 1e-14);
}

TEST(ExactLogLikelihood, MatchesNaiveOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Dataset d = random_dataset(300, 4, 100 + s);
    const Beta b = random_beta(4, 200 + s);
    EXPECT_NEAR(exact_log_likelihood(b, d), naive_log_likelihood(b, d), 1e-9);
  }
}

TEST(ExactLogLikelihood, BitwiseIdenticalAcrossWorkerCounts) {
  const Dataset d = random_dataset(50000, 5, 7);
  const Beta b = random_beta(5, 8, 0.3);
  const double serial = exact_log_likelihood(b, d);
  for (std::size_t w : {1, 2, 4, 16}) {
    WorkerPool pool(w);
    EXPECT_EQ(exact_log_likelihood(b, d, &pool), serial) << w << " workers";
  }
}

TEST(ExactLogLikelihood, NonFiniteTermReportsRow) {
  RowMatrix X(3, 1);
  X << 1.0, 10.0, 1.0;
  const Dataset d(X, {0, 0, 1});
  try {
    exact_log_likelihood((Beta(1) << 1e308).finished(), d);
    FAIL() << "expected NonFiniteTermError";
  } catch (const NonFiniteTermError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}

TEST(ExactLogLikelihood, NeverPositiveAndConcave) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Dataset d = random_dataset(60, 3, 300 + s);
    const Beta b1 = random_beta(3, 400 + s, 2.0);
    const Beta b2 = random_beta(3, 500 + s, 2.0);
    const double l1 = exact_log_likelihood(b1, d), l2 = exact_log_likelihood(b2, d);
    EXPECT_LE(l1, 0.0);
    EXPECT_GE(exact_log_likelihood(0.5 * b1 + 0.5 * b2, d), 0.5 * (l1 + l2) - 1e-10);
  }
}

TEST(Dataset, EnforcesInvariants) {
  RowMatrix X(2, 1);
  X << 1.0, 2.0;
  EXPECT_THROW(Dataset(X, {1}), DataError);
  EXPECT_THROW(Dataset(X, {1, 2}), DataError);
  X(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Dataset(X, {1, 0}), DataError);
  EXPECT_THROW(Dataset(RowMatrix(0, 1), {}), DataError);
}

TEST(LogPrior, StandardNormalAtMode) {
  const PriorSpec p = PriorSpec::isotropic(1, 1.0);
  EXPECT_NEAR(log_prior(Beta::Zero(1), p), -0.9189385332046727, 1e-15);
  const PriorSpec quarter = PriorSpec::isotropic(1, 1.0, 0.25);
  EXPECT_NEAR(log_prior(Beta::Zero(1), quarter), 0.25 * -0.9189385332046727, 1e-15);
}

TEST(LogPrior, MatchesQuadraticFormOracle) {
  const PriorSpec p = PriorSpec::isotropic(2, 1000.0);
  const Beta b = (Beta(2) << 1.0, 1.0).finished();
  // -0.5 b' S^-1 b - 0.5 log((2 pi)^2 det S), S = diag(1000, 1000)
  const double oracle = -0.5 * (2.0 / 1000.0) - 0.5 * std::log(std::pow(2.0 * std::numbers::pi, 2) * 1000.0 * 1000.0);
  EXPECT_NEAR(log_prior(b, p), oracle, 1e-12);

  Matrix S(2, 2);
  S << 2.0, 0.6, 0.6, 1.0;
  const PriorSpec q(S, 0.5);
  const Beta c = (Beta(2) << 0.3, -1.2).finished();
  const double quad = c.dot(S.inverse() * c);
  EXPECT_NEAR(log_prior(c, q), 0.5 * (-0.5 * quad - 0.5 * std::log(std::pow(2.0 * std::numbers::pi, 2) * S.determinant())),
              1e-12);
}

TEST(PriorSpec, RejectsInvalidConfiguration) {
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  EXPECT_THROW(PriorSpec{bad}, ConfigError);
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(PriorSpec{asym}, ConfigError);
  EXPECT_THROW(PriorSpec::isotropic(2, 1.0, 0.0), ConfigError);
  EXPECT_THROW(PriorSpec::isotropic(2, 1.0, 1.5), ConfigError);
  EXPECT_THROW(PriorSpec::with_mean((Vector(2) << 0.0, 1.0).finished(), Matrix::Identity(2, 2)), ConfigError);
  EXPECT_NO_THROW(PriorSpec::with_mean(Vector::Zero(2), Matrix::Identity(2, 2)));
}

TEST(ExactLogPosterior, Composition) {
  RowMatrix X(4, 1);
  X << 1.0, -2.0, 0.5, 3.0;
  const Dataset d(X, {1, 0, 0, 1});
  const LogPosteriorValue v = exact_log_posterior(Beta::Zero(1), d, PriorSpec::isotropic(1, 1.0));
  EXPECT_NEAR(v.total, -4.0 * std::log(2.0) - 0.5 * std::log(2.0 * std::numbers::pi), 1e-14);
  EXPECT_EQ(v.total, v.log_likelihood + v.log_prior);
}

TEST(ExactLogPosterior, ShardedEqualsSerialReference) {
  const Dataset d = random_dataset(20000, 3, 21);
  const PriorSpec prior = PriorSpec::isotropic(3, 1000.0);
  WorkerPool pool(4);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Beta b = random_beta(3, 30 + s, 0.5);
    const LogPosteriorValue sharded = exact_log_posterior(b, d, prior, &pool);
    const LogPosteriorValue serial = exact_log_posterior(b, d, prior);
    EXPECT_EQ(sharded.total, serial.total);
    EXPECT_EQ(sharded.total, sharded.log_likelihood + sharded.log_prior);
  }
}

}  // namespace
