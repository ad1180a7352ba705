#pragma once

#include "fdi/ar_noise.hpp"
#include "fdi/grid_model.hpp"

#include <Eigen/Dense>

#include <span>
#include <string_view>

namespace fdi {

/// M x N block of sequential readings; row i holds the N samples of meter i.
class ObservationBlock {
 public:
  explicit ObservationBlock(Eigen::MatrixXd readings);

  const Eigen::MatrixXd& readings() const noexcept { return x_; }
  Eigen::Index meters() const noexcept { return x_.rows(); }
  Eigen::Index samples() const noexcept { return x_.cols(); }
  Eigen::VectorXd row_means() const { return x_.rowwise().mean(); }

 private:
  Eigen::MatrixXd x_;
};

enum class EstimatorKind { GaussianSingle, GaussianSequential, ArMle };

std::string_view to_string(EstimatorKind kind);

struct StateEstimate {
  Eigen::VectorXd theta_hat;
  EstimatorKind method;
};

/// (H^T S^-1 H)^-1 H^T S^-1 x with S = diag(variances).
StateEstimate wls_estimate(const Eigen::MatrixXd& h, const Eigen::VectorXd& variances, const Eigen::VectorXd& x);
StateEstimate wls_estimate(const MeasurementMatrix& mm, const Eigen::VectorXd& variances, const Eigen::VectorXd& x);

/// wls_estimate on the per-meter sample means.
StateEstimate wls_estimate_sequential(const Eigen::MatrixXd& h, const Eigen::VectorXd& variances,
                                      const ObservationBlock& obs);
StateEstimate wls_estimate_sequential(const MeasurementMatrix& mm, const Eigen::VectorXd& variances,
                                      const ObservationBlock& obs);

/// Maximum-likelihood state under per-meter AR noise: (H^T A H)^-1 H^T z where
/// A = diag(a_i / s_i^2) and z_i = (1^T T_i^T (T_i x_i + c_i)) / s_i^2.
StateEstimate ar_mle_estimate(const Eigen::MatrixXd& h, std::span<const ArNoiseModel> models,
                              const ObservationBlock& obs);
StateEstimate ar_mle_estimate(const MeasurementMatrix& mm, std::span<const ArNoiseModel> models,
                              const ObservationBlock& obs);

/// Innovation variances of the models, used as the Gaussian detector's meter variances.
Eigen::VectorXd innovation_variances(std::span<const ArNoiseModel> models);

namespace detail {

/// Solves (H^T W H) theta = rhs with W = diag(weights) through a Cholesky factorization.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& h, const Eigen::VectorXd& weights,
                                       const Eigen::VectorXd& rhs);

}  // namespace detail

}  // namespace fdi
