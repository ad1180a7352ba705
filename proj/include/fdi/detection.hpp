#pragma once

#include "fdi/ar_noise.hpp"
#include "fdi/estimation.hpp"
#include "fdi/grid_model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fdi {

enum class DetectorKind { White, Gaussian, GaussianSequential, Ar };

std::string_view to_string(DetectorKind kind);
std::optional<DetectorKind> parse_detector(std::string_view name);

struct DetectionStatistic {
  double value = 0.0;
  DetectorKind detector = DetectorKind::White;
  Eigen::Index dof = 0;  // M - K
};

struct NuisanceEstimates {
  Eigen::VectorXd theta_1_hat;  // K
  Eigen::VectorXd theta_b_hat;  // M - K
};

struct GlrtResult {
  DetectionStatistic statistic;
  NuisanceEstimates nuisance;
};

/// GLRT for x = H theta_1 + B theta_b + w, w ~ N(0, I): T = x^T P x with P the
/// residual projector of H, evaluated as ||B^T x||^2.
GlrtResult glrt_white(const MeasurementMatrix& mm, const Eigen::VectorXd& x);

/// GLRT for w ~ N(0, diag(variances)). Whitens by diag(variances)^{-1/2} and then
/// applies the white-noise form. The whitened system is factored once at construction.
class GaussianDetector {
 public:
  GaussianDetector(const MeasurementMatrix& mm, Eigen::VectorXd variances);

  DetectionStatistic evaluate(const Eigen::VectorXd& x) const;

  /// Statistic on the per-meter sample means of the block.
  DetectionStatistic evaluate_sequential(const ObservationBlock& obs) const;

  const MeasurementMatrix& whitened() const noexcept { return whitened_; }

 private:
  Eigen::VectorXd inv_sd_;
  MeasurementMatrix whitened_;
};

/// GLRT under per-meter AR noise for an N-sample block:
///   T = (1/N) z'^T (I - H'(H'^T H')^{-1} H'^T) z'
/// with H' = diag(sqrt(a_i)/s_i) H and z'_i = 1^T T_i^T (T_i y_i + c_i) / a_i, y_i = (sqrt(a_i)/s_i) x_i.
class ArDetector {
 public:
  ArDetector(const MeasurementMatrix& mm, std::vector<ArNoiseModel> models, Eigen::Index samples);

  GlrtResult evaluate(const ObservationBlock& obs) const;

  const MeasurementMatrix& whitened() const noexcept { return whitened_; }
  Eigen::Index samples() const noexcept { return samples_; }

  /// The vector z' the statistic is a quadratic form in.
  Eigen::VectorXd whitened_means(const ObservationBlock& obs) const;

 private:
  Eigen::Index samples_;
  std::vector<WhiteningOperator> ops_;
  Eigen::VectorXd scale_;  // sqrt(a_i) / s_i
  MeasurementMatrix whitened_;
};

DetectionStatistic glrt_gaussian(const MeasurementMatrix& mm, const Eigen::VectorXd& variances,
                                 const Eigen::VectorXd& x);

DetectionStatistic glrt_gaussian_sequential(const MeasurementMatrix& mm, const Eigen::VectorXd& variances,
                                            const ObservationBlock& obs);

GlrtResult glrt_ar(const MeasurementMatrix& mm, std::span<const ArNoiseModel> models, const ObservationBlock& obs);

/// Decide H1 iff the statistic strictly exceeds tau.
bool decide(const DetectionStatistic& stat, double tau);

/// Smallest null score with at most a pfa fraction of null scores strictly above it.
/// Needs at least 100 scores and 0 < pfa < 1.
double threshold_for_pfa(std::span<const double> null_scores, double pfa);

/// Dense I - H (H^T H)^{-1} H^T. Test and diagnostic use only.
Eigen::MatrixXd residual_projector(const Eigen::MatrixXd& h);

}  // namespace fdi
