#include "fdi/detection.hpp"

#include "fdi/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fdi {

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::White: return "white";
    case DetectorKind::Gaussian: return "gaussian";
    case DetectorKind::GaussianSequential: return "gaussian-sequential";
    case DetectorKind::Ar: return "ar";
  }
  return "unknown";
}

std::optional<DetectorKind> parse_detector(std::string_view name) {
  for (auto kind : {DetectorKind::White, DetectorKind::Gaussian, DetectorKind::GaussianSequential, DetectorKind::Ar}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

GlrtResult glrt_white(const MeasurementMatrix& mm, const Eigen::VectorXd& x) {
  if (x.size() != mm.rows()) throw DimensionError("measurement length does not match M");
  NuisanceEstimates nuisance{mm.least_squares(x), mm.complement().transpose() * x};
  const double value = nuisance.theta_b_hat.squaredNorm();
  return {{value, DetectorKind::White, mm.dof()}, std::move(nuisance)};
}

namespace {

Eigen::VectorXd checked_inverse_sd(const MeasurementMatrix& mm, const Eigen::VectorXd& variances) {
  if (variances.size() != mm.rows()) throw DimensionError("one variance per meter is required");
  if (!(variances.array() > 0.0).all()) throw ValidationError("meter variances must be positive");
  return variances.cwiseSqrt().cwiseInverse();
}

}  // namespace

GaussianDetector::GaussianDetector(const MeasurementMatrix& mm, Eigen::VectorXd variances)
    : inv_sd_(checked_inverse_sd(mm, variances)),
      whitened_(inv_sd_.asDiagonal() * mm.jacobian()) {}

DetectionStatistic GaussianDetector::evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != inv_sd_.size()) throw DimensionError("measurement length does not match M");
  const Eigen::VectorXd y = inv_sd_.cwiseProduct(x);
  const double value = (whitened_.complement().transpose() * y).squaredNorm();
  return {value, DetectorKind::Gaussian, whitened_.dof()};
}

DetectionStatistic GaussianDetector::evaluate_sequential(const ObservationBlock& obs) const {
  if (obs.meters() != inv_sd_.size()) throw DimensionError("observation block has wrong meter count");
  DetectionStatistic stat = evaluate(obs.row_means());
  stat.detector = DetectorKind::GaussianSequential;
  return stat;
}

namespace {

std::vector<WhiteningOperator> make_operators(const MeasurementMatrix& mm, const std::vector<ArNoiseModel>& models,
                                              Eigen::Index samples) {
  if (static_cast<Eigen::Index>(models.size()) != mm.rows()) {
    throw DimensionError("one noise model per meter is required");
  }
  std::vector<WhiteningOperator> ops;
  ops.reserve(models.size());
  for (const auto& model : models) ops.emplace_back(model, samples);
  return ops;
}

Eigen::VectorXd whitening_scale(const std::vector<WhiteningOperator>& ops, const std::vector<ArNoiseModel>& models) {
  Eigen::VectorXd scale(static_cast<Eigen::Index>(ops.size()));
  for (std::size_t i = 0; i < ops.size(); ++i) {
    scale(static_cast<Eigen::Index>(i)) = std::sqrt(ops[i].energy() / models[i].innovation_variance());
  }
  return scale;
}

}  // namespace

ArDetector::ArDetector(const MeasurementMatrix& mm, std::vector<ArNoiseModel> models, Eigen::Index samples)
    : samples_(samples),
      ops_(make_operators(mm, models, samples)),
      scale_(whitening_scale(ops_, models)),
      whitened_(scale_.asDiagonal() * mm.jacobian()) {}

Eigen::VectorXd ArDetector::whitened_means(const ObservationBlock& obs) const {
  if (obs.meters() != scale_.size()) throw DimensionError("observation block has wrong meter count");
  if (obs.samples() != samples_) throw DimensionError("observation block has wrong sample count");
  Eigen::VectorXd z(scale_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const auto& op = ops_[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = scale_(i) * obs.readings().row(i).transpose();
    z(i) = whitening_stats(op, y).z / op.energy();
  }
  return z;
}

GlrtResult ArDetector::evaluate(const ObservationBlock& obs) const {
  const Eigen::VectorXd z = whitened_means(obs);
  NuisanceEstimates nuisance{whitened_.least_squares(z), whitened_.complement().transpose() * z};
  const double value = nuisance.theta_b_hat.squaredNorm() / static_cast<double>(samples_);
  return {{value, DetectorKind::Ar, whitened_.dof()}, std::move(nuisance)};
}

DetectionStatistic glrt_gaussian(const MeasurementMatrix& mm, const Eigen::VectorXd& variances,
                                 const Eigen::VectorXd& x) {
  return GaussianDetector(mm, variances).evaluate(x);
}

DetectionStatistic glrt_gaussian_sequential(const MeasurementMatrix& mm, const Eigen::VectorXd& variances,
                                            const ObservationBlock& obs) {
  return GaussianDetector(mm, variances).evaluate_sequential(obs);
}

GlrtResult glrt_ar(const MeasurementMatrix& mm, std::span<const ArNoiseModel> models, const ObservationBlock& obs) {
  return ArDetector(mm, std::vector<ArNoiseModel>(models.begin(), models.end()), obs.samples()).evaluate(obs);
}

bool decide(const DetectionStatistic& stat, double tau) { return stat.value > tau; }

double threshold_for_pfa(std::span<const double> null_scores, double pfa) {
  if (null_scores.size() < 100) throw ValidationError("at least 100 null scores are required");
  if (!(pfa > 0.0 && pfa < 1.0)) throw ValidationError("false-alarm rate must lie in (0, 1)");
  std::vector<double> sorted(null_scores.begin(), null_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  // Allowed exceedances; the epsilon keeps e.g. 0.05 * 100 from rounding down to 4.
  const auto allowed = static_cast<std::size_t>(std::floor(pfa * static_cast<double>(n) + 1e-9));
  // At most `allowed` scores sit strictly above this entry; any smaller value has more.
  return sorted[n - 1 - std::min(allowed, n - 1)];
}

Eigen::MatrixXd residual_projector(const Eigen::MatrixXd& h) {
  const Eigen::Index m = h.rows();
  const Eigen::MatrixXd gram = h.transpose() * h;
  return Eigen::MatrixXd::Identity(m, m) - h * gram.ldlt().solve(h.transpose());
}

}  // namespace fdi
