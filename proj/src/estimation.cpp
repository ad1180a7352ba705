#include "fdi/estimation.hpp"

#include "fdi/errors.hpp"

namespace fdi {

ObservationBlock::ObservationBlock(Eigen::MatrixXd readings) : x_(std::move(readings)) {
  if (x_.rows() < 1 || x_.cols() < 1) throw DimensionError("observation block needs at least one meter and sample");
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::GaussianSingle: return "gaussian-single";
    case EstimatorKind::GaussianSequential: return "gaussian-sequential";
    case EstimatorKind::ArMle: return "ar-mle";
  }
  return "unknown";
}

namespace detail {

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& h, const Eigen::VectorXd& weights,
                                       const Eigen::VectorXd& rhs) {
  const Eigen::MatrixXd normal = h.transpose() * weights.asDiagonal() * h;
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) throw RankError("normal matrix is singular");
  // LLT succeeds on numerically semidefinite input; reject a collapsed pivot explicitly.
  const auto diag = llt.matrixLLT().diagonal();
  if (diag.minCoeff() <= 1e-10 * diag.maxCoeff()) throw RankError("normal matrix is singular");
  return llt.solve(rhs);
}

}  // namespace detail

namespace {

void check_variances(const Eigen::MatrixXd& h, const Eigen::VectorXd& variances) {
  if (variances.size() != h.rows()) throw DimensionError("one variance per meter is required");
  if (!(variances.array() > 0.0).all()) throw ValidationError("meter variances must be positive");
}

}  // namespace

StateEstimate wls_estimate(const Eigen::MatrixXd& h, const Eigen::VectorXd& variances, const Eigen::VectorXd& x) {
  check_variances(h, variances);
  if (x.size() != h.rows()) throw DimensionError("measurement length does not match M");
  const Eigen::VectorXd weights = variances.cwiseInverse();
  const Eigen::VectorXd rhs = h.transpose() * weights.cwiseProduct(x);
  return {detail::solve_normal_equations(h, weights, rhs), EstimatorKind::GaussianSingle};
}

StateEstimate wls_estimate(const MeasurementMatrix& mm, const Eigen::VectorXd& variances, const Eigen::VectorXd& x) {
  return wls_estimate(mm.jacobian(), variances, x);
}

StateEstimate wls_estimate_sequential(const Eigen::MatrixXd& h, const Eigen::VectorXd& variances,
                                      const ObservationBlock& obs) {
  if (obs.meters() != h.rows()) throw DimensionError("observation block has wrong meter count");
  StateEstimate est = wls_estimate(h, variances, obs.row_means());
  est.method = EstimatorKind::GaussianSequential;
  return est;
}

StateEstimate wls_estimate_sequential(const MeasurementMatrix& mm, const Eigen::VectorXd& variances,
                                      const ObservationBlock& obs) {
  return wls_estimate_sequential(mm.jacobian(), variances, obs);
}

StateEstimate ar_mle_estimate(const Eigen::MatrixXd& h, std::span<const ArNoiseModel> models,
                              const ObservationBlock& obs) {
  const Eigen::Index m = h.rows();
  if (static_cast<Eigen::Index>(models.size()) != m) throw DimensionError("one noise model per meter is required");
  if (obs.meters() != m) throw DimensionError("observation block has wrong meter count");

  Eigen::VectorXd weights(m);
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& model = models[static_cast<std::size_t>(i)];
    const WhiteningOperator op(model, obs.samples());
    const auto stats = whitening_stats(op, obs.readings().row(i).transpose());
    weights(i) = stats.a / model.innovation_variance();
    z(i) = stats.z / model.innovation_variance();
  }
  return {detail::solve_normal_equations(h, weights, h.transpose() * z), EstimatorKind::ArMle};
}

StateEstimate ar_mle_estimate(const MeasurementMatrix& mm, std::span<const ArNoiseModel> models,
                              const ObservationBlock& obs) {
  return ar_mle_estimate(mm.jacobian(), models, obs);
}

Eigen::VectorXd innovation_variances(std::span<const ArNoiseModel> models) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(models.size()));
  for (std::size_t i = 0; i < models.size(); ++i) v(static_cast<Eigen::Index>(i)) = models[i].innovation_variance();
  return v;
}

}  // namespace fdi
