#include "fdi/detection.hpp"

#include "fdi/errors.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace fdi {
namespace {

// Quadratic form x^T (I - S^-1 H (H^T S^-1 H)^-1 H^T) S^-1 x evaluated literally.
double gaussian_glrt_formula(const Eigen::MatrixXd& h, const Eigen::VectorXd& variances, const Eigen::VectorXd& x) {
  const Eigen::Index m = h.rows();
  const Eigen::MatrixXd s_inv = variances.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd inner = (h.transpose() * s_inv * h).inverse();
  const Eigen::MatrixXd form = (Eigen::MatrixXd::Identity(m, m) - s_inv * h * inner * h.transpose()) * s_inv;
  return x.transpose() * form * x;
}

std::vector<ArNoiseModel> white_models(const Eigen::VectorXd& variances) {
  std::vector<ArNoiseModel> models;
  for (Eigen::Index i = 0; i < variances.size(); ++i) models.push_back(ArNoiseModel::white(variances(i)));
  return models;
}

TEST(GlrtWhite, ColumnSpaceInputScoresZero) {
  const MeasurementMatrix mm(testing::random_matrix(10, 4, 1));
  const Eigen::VectorXd x = mm.jacobian() * Eigen::Vector4d(1, -2, 3, 0.5);
  const auto r = glrt_white(mm, x);
  EXPECT_NEAR(r.statistic.value, 0.0, 1e-12);
  EXPECT_EQ(r.statistic.dof, 6);
  EXPECT_EQ(r.statistic.detector, DetectorKind::White);
}

TEST(GlrtWhite, OrthogonalInput) {
  const MeasurementMatrix mm(Eigen::Vector2d(1, 0));
  const auto r = glrt_white(mm, Eigen::Vector2d(0, 2));
  EXPECT_NEAR(r.statistic.value, 4.0, 1e-14);
  EXPECT_NEAR(r.nuisance.theta_1_hat(0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(r.nuisance.theta_b_hat(0)), 2.0, 1e-14);
}

TEST(GlrtWhite, MatchesLeastSquaresResidual) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const MeasurementMatrix mm(testing::random_matrix(10, 4, seed));
    const Eigen::VectorXd x = testing::random_matrix(10, 1, seed + 300);
    const auto r = glrt_white(mm, x);
    const double oracle = testing::least_squares_residual(mm.jacobian(), x);
    EXPECT_NEAR(r.statistic.value, oracle, 1e-8 * oracle);
    EXPECT_NEAR(r.statistic.value, r.nuisance.theta_b_hat.squaredNorm(), 1e-12 * oracle);
    EXPECT_NEAR(r.statistic.value, x.dot(residual_projector(mm.jacobian()) * x), 1e-9 * oracle);
  }
}

TEST(GlrtWhite, LengthMismatch) {
  const MeasurementMatrix mm(testing::random_matrix(10, 4, 1));
  EXPECT_THROW(glrt_white(mm, Eigen::VectorXd::Zero(11)), DimensionError);
}

TEST(GlrtGaussian, IdentityCovarianceEqualsWhite) {
  const MeasurementMatrix mm(testing::random_matrix(10, 4, 2));
  const Eigen::VectorXd x = testing::random_matrix(10, 1, 3);
  EXPECT_EQ(glrt_gaussian(mm, Eigen::VectorXd::Ones(10), x).value, glrt_white(mm, x).statistic.value);
}

TEST(GlrtGaussian, ColumnSpaceInputScoresZero) {
  const MeasurementMatrix mm(testing::random_matrix(10, 4, 4));
  const Eigen::VectorXd variances = testing::random_matrix(10, 1, 5).array().square() + 0.1;
  EXPECT_NEAR(glrt_gaussian(mm, variances, mm.jacobian() * Eigen::Vector4d(3, 1, -1, 2)).value, 0.0, 1e-10);
}

TEST(GlrtGaussian, QuadraticScaling) {
  const MeasurementMatrix mm(testing::random_matrix(10, 4, 6));
  const Eigen::VectorXd x = testing::random_matrix(10, 1, 7);
  const double unit = gaussian_glrt_formula(mm.jacobian(), Eigen::VectorXd::Ones(10), x);
  const double four = gaussian_glrt_formula(mm.jacobian(), Eigen::VectorXd::Constant(10, 4.0), x);
  EXPECT_NEAR(four, unit / 4.0, 1e-12 * unit);
  EXPECT_NEAR(glrt_gaussian(mm, Eigen::VectorXd::Constant(10, 4.0), x).value, four, 1e-10 * four);
}

TEST(GlrtGaussian, MatchesDirectFormulaWithHeterogeneousVariances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MeasurementMatrix mm(testing::random_matrix(12, 3, seed));
    const Eigen::VectorXd variances = testing::random_matrix(12, 1, seed + 50).array().square() + 0.05;
    const Eigen::VectorXd x = testing::random_matrix(12, 1, seed + 100);
    const double oracle = gaussian_glrt_formula(mm.jacobian(), variances, x);
    EXPECT_NEAR(glrt_gaussian(mm, variances, x).value, oracle, 1e-9 * oracle);
  }
}

TEST(GlrtGaussianSequential, SingleSampleAndRepeatedColumns) {
  const MeasurementMatrix mm(testing::random_matrix(9, 3, 8));
  const Eigen::VectorXd variances = Eigen::VectorXd::Constant(9, 0.3);
  const Eigen::VectorXd x = testing::random_matrix(9, 1, 9);
  const double single = glrt_gaussian(mm, variances, x).value;

  EXPECT_NEAR(glrt_gaussian_sequential(mm, variances, ObservationBlock(x)).value, single, 1e-14 * single);
  Eigen::MatrixXd copies(9, 7);
  copies.colwise() = x;
  EXPECT_NEAR(glrt_gaussian_sequential(mm, variances, ObservationBlock(copies)).value, single, 1e-12 * single);
}

TEST(GlrtGaussianSequential, MatchesFormulaOnSampleMean) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MeasurementMatrix mm(testing::random_matrix(12, 4, seed));
    const Eigen::VectorXd variances = testing::random_matrix(12, 1, seed + 7).array().square() + 0.1;
    const Eigen::MatrixXd block = testing::random_matrix(12, 20, seed + 9);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(12);
    for (Eigen::Index n = 0; n < 20; ++n) mean += block.col(n) / 20.0;
    const double oracle = gaussian_glrt_formula(mm.jacobian(), variances, mean);
    const auto stat = glrt_gaussian_sequential(mm, variances, ObservationBlock(block));
    EXPECT_NEAR(stat.value, oracle, 1e-12 * (1.0 + oracle) * 1e3);
    EXPECT_EQ(stat.detector, DetectorKind::GaussianSequential);
  }
}

TEST(GlrtAr, WhiteModelsEqualSequentialGaussian) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Eigen::Index m = 5 + static_cast<Eigen::Index>(seed % 11);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(seed % 4);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(seed % 13);
    const MeasurementMatrix mm(testing::random_matrix(m, k, seed));
    const Eigen::VectorXd variances = testing::random_matrix(m, 1, seed + 1).array().square() + 0.1;
    const ObservationBlock obs(testing::random_matrix(m, n, seed + 2));

    const auto ar = glrt_ar(mm, white_models(variances), obs);
    const double gauss = glrt_gaussian_sequential(mm, variances, obs).value;
    EXPECT_LE(std::abs(ar.statistic.value - gauss), 1e-9 * (1.0 + gauss));
    EXPECT_EQ(ar.statistic.detector, DetectorKind::Ar);
  }
}

TEST(GlrtAr, NoiselessAttackFreeBlockScoresZero) {
  const MeasurementMatrix mm(testing::random_matrix(15, 4, 12));
  Eigen::MatrixXd block(15, 20);
  block.colwise() = mm.jacobian() * Eigen::Vector4d(1, 1, 1, 1);
  const std::vector<ArNoiseModel> models(15, ArNoiseModel(Eigen::VectorXd::Constant(1, 0.9), 0.5));
  const auto r = glrt_ar(mm, models, ObservationBlock(block));
  EXPECT_NEAR(r.statistic.value, 0.0, 1e-9);
  EXPECT_TRUE(r.nuisance.theta_1_hat.allFinite());
}

TEST(GlrtAr, NullMeanMatchesDegreesOfFreedom) {
  // Under white noise z' is N(H' theta, I), so N * T is chi-square with M - K dof.
  constexpr Eigen::Index m = 50, k = 10, n = 20;
  constexpr int trials = 2000;
  const MeasurementMatrix mm(testing::random_matrix(m, k, 13));
  const ArNoiseModel model = ArNoiseModel::white(0.5);
  const std::vector<ArNoiseModel> models(m, model);
  const ArDetector detector(mm, models, n);

  Rng rng(4242);
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd x(m, n);
    for (Eigen::Index i = 0; i < m; ++i) x.row(i) = simulate_ar(model, n, rng).transpose();
    sum += detector.evaluate(ObservationBlock(x)).statistic.value;
  }
  const double mean_scaled = n * sum / trials;
  EXPECT_NEAR(mean_scaled, 40.0, 0.05 * 40.0);
}

TEST(GlrtAr, ScoreIsInvariantToState) {
  const MeasurementMatrix mm(testing::random_matrix(15, 4, 14));
  const std::vector<ArNoiseModel> models(15, ArNoiseModel(Eigen::Vector2d(0.6, 0.2), 0.4));
  const Eigen::MatrixXd noise = testing::random_matrix(15, 20, 15);
  Eigen::MatrixXd shifted = noise;
  shifted.colwise() += mm.jacobian() * Eigen::Vector4d(5, -3, 2, 7);
  const double base = glrt_ar(mm, models, ObservationBlock(noise)).statistic.value;
  EXPECT_NEAR(glrt_ar(mm, models, ObservationBlock(shifted)).statistic.value, base, 1e-9 * (1.0 + base));
}

TEST(GlrtAr, Errors) {
  const MeasurementMatrix mm(testing::random_matrix(6, 2, 16));
  const std::vector<ArNoiseModel> models(5, ArNoiseModel::white(1.0));
  EXPECT_THROW(glrt_ar(mm, models, ObservationBlock(Eigen::MatrixXd::Zero(6, 3))), DimensionError);
  const ArDetector detector(mm, std::vector<ArNoiseModel>(6, ArNoiseModel::white(1.0)), 4);
  EXPECT_THROW(detector.evaluate(ObservationBlock(Eigen::MatrixXd::Zero(6, 3))), DimensionError);
}

TEST(Projector, SymmetricIdempotentAnnihilatesH) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd h = testing::random_matrix(12, 5, seed);
    const Eigen::MatrixXd p = residual_projector(h);
    EXPECT_LE(testing::max_abs(p - p.transpose()), 1e-12);
    EXPECT_LE(testing::max_abs(p * p - p), 1e-9);
    EXPECT_LE(testing::max_abs(p * h), 1e-9);
    const MeasurementMatrix mm(h);
    EXPECT_LE(testing::max_abs(mm.complement() * mm.complement().transpose() - p), 1e-9);
  }
}

TEST(Projector, UnobservableAttackInvariance) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const MeasurementMatrix mm(testing::random_matrix(10, 4, seed));
    const Eigen::VectorXd x = testing::random_matrix(10, 1, seed + 1);
    const Eigen::VectorXd theta_a = 10.0 * testing::random_matrix(4, 1, seed + 2);
    const double base = glrt_white(mm, x).statistic.value;
    const double attacked = glrt_white(mm, x + mm.jacobian() * theta_a).statistic.value;
    EXPECT_LE(std::abs(attacked - base), 1e-9 * (1.0 + base));
  }
}

TEST(Decide, StrictInequality) {
  EXPECT_TRUE(decide({4.0, DetectorKind::White, 1}, 3.0));
  EXPECT_FALSE(decide({4.0, DetectorKind::White, 1}, 4.0));
  EXPECT_FALSE(decide({0.0, DetectorKind::White, 1}, 0.0));
}

TEST(Decide, MonotoneInThreshold) {
  const DetectionStatistic stat{2.5, DetectorKind::Ar, 3};
  bool previous = true;
  for (double tau = -5.0; tau <= 5.0; tau += 0.25) {
    const bool now = decide(stat, tau);
    EXPECT_FALSE(!previous && now) << "flipped false->true at tau=" << tau;
    previous = now;
  }
}

TEST(ThresholdForPfa, CountingExamples) {
  std::vector<double> scores(100);
  std::iota(scores.begin(), scores.end(), 1.0);
  std::vector<double> shuffled(scores.rbegin(), scores.rend());
  EXPECT_DOUBLE_EQ(threshold_for_pfa(shuffled, 0.05), 95.0);
  EXPECT_DOUBLE_EQ(threshold_for_pfa(scores, 0.5), 50.0);

  // The chosen threshold really has at most pfa * n scores above it.
  for (double pfa : {0.01, 0.05, 0.1, 0.33, 0.5, 0.9}) {
    const double tau = threshold_for_pfa(scores, pfa);
    const auto above = std::count_if(scores.begin(), scores.end(), [&](double s) { return s > tau; });
    EXPECT_LE(static_cast<double>(above), pfa * 100 + 1e-9);
    const auto above_next = std::count_if(scores.begin(), scores.end(), [&](double s) { return s >= tau; });
    EXPECT_GT(static_cast<double>(above_next), pfa * 100 + 1e-9);
  }
}

TEST(ThresholdForPfa, DegenerateScores) {
  const std::vector<double> scores(150, 2.5);
  for (double pfa : {0.01, 0.5, 0.99}) {
    const double tau = threshold_for_pfa(scores, pfa);
    EXPECT_EQ(tau, 2.5);
    EXPECT_FALSE(decide({2.5, DetectorKind::White, 1}, tau));
  }
}

TEST(ThresholdForPfa, Errors) {
  EXPECT_THROW(threshold_for_pfa(std::vector<double>(99, 1.0), 0.05), ValidationError);
  EXPECT_THROW(threshold_for_pfa(std::vector<double>(100, 1.0), 0.0), ValidationError);
  EXPECT_THROW(threshold_for_pfa(std::vector<double>(100, 1.0), 1.0), ValidationError);
}

TEST(DetectorNames, RoundTrip) {
  for (auto kind : {DetectorKind::White, DetectorKind::Gaussian, DetectorKind::GaussianSequential, DetectorKind::Ar}) {
    EXPECT_EQ(parse_detector(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_detector("glrt").has_value());
}

}  // namespace
}  // namespace fdi
