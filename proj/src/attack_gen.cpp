#include "fdi/attack_gen.hpp"

#include "fdi/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace fdi {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::Sparse: return "sparse";
    case AttackKind::Unobservable: return "unobservable";
    case AttackKind::Ica: return "ica";
  }
  return "unknown";
}

std::optional<AttackKind> parse_attack_kind(std::string_view name) {
  for (auto kind : {AttackKind::None, AttackKind::Sparse, AttackKind::Unobservable, AttackKind::Ica}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

AttackVector sparse_attack(Eigen::Index meters, Eigen::Index count, double magnitude, Rng& rng) {
  if (meters < 1) throw DimensionError("meter count must be positive");
  if (count < 0 || count > meters) throw ValidationError("sparsity must lie in [0, M]");

  // Partial Fisher-Yates: the first `count` slots end up a uniform sample without replacement.
  std::vector<Eigen::Index> slots(static_cast<std::size_t>(meters));
  std::iota(slots.begin(), slots.end(), Eigen::Index{0});
  Eigen::VectorXd a = Eigen::VectorXd::Zero(meters);
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, meters - 1);
    std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(pick(rng))]);
    a(slots[static_cast<std::size_t>(i)]) = magnitude;
  }
  const Eigen::Index nonzeros = magnitude == 0.0 ? 0 : count;
  return {std::move(a), AttackKind::Sparse, nonzeros, magnitude};
}

AttackVector unobservable_attack(const MeasurementMatrix& mm, const Eigen::VectorXd& theta_a) {
  if (theta_a.size() != mm.cols()) throw DimensionError("theta_a length does not match K");
  Eigen::VectorXd a = mm.jacobian() * theta_a;
  const auto nonzeros = static_cast<Eigen::Index>((a.array() != 0.0).count());
  const double magnitude = a.size() > 0 ? a.lpNorm<Eigen::Infinity>() : 0.0;
  return {std::move(a), AttackKind::Unobservable, nonzeros, magnitude};
}

namespace {

// W <- (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

}  // namespace

IcaModel fastica(const ObservationBlock& obs, const IcaOptions& options, Rng& rng) {
  const Eigen::Index n = obs.samples();
  if (n < 2) throw ValidationError("FastICA needs at least two samples");

  IcaModel model;
  model.mean = obs.row_means();
  const Eigen::MatrixXd centered = obs.readings().colwise() - model.mean;
  if (!(centered.cwiseAbs().maxCoeff() > 0.0)) throw ValidationError("zero-variance input");

  // Covariance eigenpairs from the thin SVD of the centered block: lambda_i = s_i^2 / N.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd eig = svd.singularValues().array().square() / static_cast<double>(n);
  const double cutoff = options.eig_threshold * eig(0);
  Eigen::Index r = 0;
  while (r < eig.size() && eig(r) > 0.0 && eig(r) >= cutoff) ++r;
  if (r == 0) throw ValidationError("no component survives eigenvalue pruning");

  const Eigen::MatrixXd u = svd.matrixU().leftCols(r);
  const Eigen::VectorXd sd = eig.head(r).cwiseSqrt();
  model.whitening = sd.cwiseInverse().asDiagonal() * u.transpose();
  const Eigen::MatrixXd z = model.whitening * centered;  // r x N, identity covariance

  std::normal_distribution<double> normal;
  Eigen::MatrixXd w(r, r);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
  w = symmetric_decorrelation(w);

  const double inv_n = 1.0 / static_cast<double>(n);
  for (model.iterations = 1; model.iterations <= options.max_iter; ++model.iterations) {
    const Eigen::MatrixXd g = (w * z).array().tanh().matrix();
    const Eigen::VectorXd mean_dg = (1.0 - g.array().square()).rowwise().mean();
    Eigen::MatrixXd next = g * z.transpose() * inv_n - mean_dg.asDiagonal() * w;
    next = symmetric_decorrelation(next);
    // Rows converge up to sign; compare directions through |<w_new, w_old>|.
    const double change = (1.0 - (next * w.transpose()).diagonal().array().abs()).abs().maxCoeff();
    w = std::move(next);
    if (change < options.tol) {
      model.convergence = IcaConvergence::Converged;
      break;
    }
  }
  if (model.iterations > options.max_iter) model.iterations = options.max_iter;

  model.weights = w;
  model.sources = w * z;
  model.mixing = u * sd.asDiagonal() * w.transpose();
  return model;
}

AttackVector ica_attack(const ObservationBlock& clean_window, double sigma_y2, double magnitude, Rng& rng,
                        const IcaOptions& options) {
  if (!(sigma_y2 >= 0.0)) throw ValidationError("sigma_y2 must be nonnegative");
  const IcaModel model = fastica(clean_window, options, rng);
  std::normal_distribution<double> normal;
  Eigen::VectorXd dy(model.components());
  for (Eigen::Index i = 0; i < dy.size(); ++i) dy(i) = normal(rng);
  dy *= std::sqrt(sigma_y2);
  Eigen::VectorXd a = magnitude * (model.mixing * dy);
  const auto nonzeros = static_cast<Eigen::Index>((a.array() != 0.0).count());
  return {std::move(a), AttackKind::Ica, nonzeros, magnitude};
}

}  // namespace fdi
