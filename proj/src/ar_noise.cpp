#include "fdi/ar_noise.hpp"

#include "fdi/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace fdi {

ArNoiseModel::ArNoiseModel(Eigen::VectorXd coeffs, double innovation_variance)
    : ArNoiseModel(coeffs, innovation_variance, Eigen::VectorXd::Zero(coeffs.size())) {}

ArNoiseModel::ArNoiseModel(Eigen::VectorXd coeffs, double innovation_variance, Eigen::VectorXd initial_conditions)
    : coeffs_(std::move(coeffs)), sigma2_(innovation_variance), initial_(std::move(initial_conditions)) {
  if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_)) throw ValidationError("innovation variance must be positive");
  if (initial_.size() != coeffs_.size()) {
    throw DimensionError("initial conditions must have one entry per AR coefficient");
  }
  if (!coeffs_.allFinite() || !initial_.allFinite()) throw ValidationError("AR parameters must be finite");
}

bool ArNoiseModel::is_stationary() const {
  const Eigen::Index p = order();
  if (p == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  companion.row(0) = coeffs_.transpose();
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return (es.eigenvalues().array().abs() < 1.0).all();
}

namespace {

Eigen::VectorXd run_recursion(const ArNoiseModel& model, const Eigen::VectorXd& innovations, Eigen::Index skip) {
  const Eigen::Index p = model.order();
  const Eigen::Index total = innovations.size();
  const auto& alpha = model.coeffs();
  const auto& init = model.initial_conditions();

  // w[t] for t >= 0; w[-k] comes from the initial conditions.
  Eigen::VectorXd w(total);
  for (Eigen::Index t = 0; t < total; ++t) {
    double acc = innovations(t);
    for (Eigen::Index j = 1; j <= p; ++j) {
      acc += alpha(j - 1) * (t - j >= 0 ? w(t - j) : init(j - t - 1));
    }
    w(t) = acc;
  }
  return w.tail(total - skip);
}

}  // namespace

Eigen::VectorXd simulate_ar(const ArNoiseModel& model, Eigen::Index n, Rng& rng, Eigen::Index burn_in) {
  if (n < 1) throw DimensionError("sample count must be at least 1");
  if (burn_in < 0) throw ValidationError("burn-in must be nonnegative");
  std::normal_distribution<double> normal(0.0, std::sqrt(model.innovation_variance()));
  Eigen::VectorXd v(n + burn_in);
  for (Eigen::Index t = 0; t < v.size(); ++t) v(t) = normal(rng);
  return run_recursion(model, v, burn_in);
}

Eigen::VectorXd ar_filter(const ArNoiseModel& model, const Eigen::VectorXd& innovations) {
  return run_recursion(model, innovations, 0);
}

WhiteningOperator::WhiteningOperator(const ArNoiseModel& model, Eigen::Index n) : n_(n), coeffs_(model.coeffs()) {
  if (n < 1) throw DimensionError("sample count must be at least 1");
  const Eigen::Index p = coeffs_.size();
  const auto& init = model.initial_conditions();

  // c[t] = -sum_{j>t} a_j w[t-j]: the part of innovation t that reaches back before the window.
  c_ = Eigen::VectorXd::Zero(n);
  for (Eigen::Index t = 0; t < std::min(n, p); ++t) {
    double acc = 0.0;
    for (Eigen::Index j = t + 1; j <= p; ++j) acc -= coeffs_(j - 1) * init(j - t - 1);
    c_(t) = acc;
  }

  t_ones_.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double acc = 1.0;
    for (Eigen::Index j = 1; j <= std::min(t, p); ++j) acc -= coeffs_(j - 1);
    t_ones_(t) = acc;
  }
  a_ = t_ones_.squaredNorm();
}

Eigen::VectorXd WhiteningOperator::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != n_) throw DimensionError("whitening input length does not match N");
  const Eigen::Index p = coeffs_.size();
  Eigen::VectorXd y(n_);
  for (Eigen::Index t = 0; t < n_; ++t) {
    double acc = x(t) + c_(t);
    for (Eigen::Index j = 1; j <= std::min(t, p); ++j) acc -= coeffs_(j - 1) * x(t - j);
    y(t) = acc;
  }
  return y;
}

Eigen::MatrixXd WhiteningOperator::dense() const {
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(n_, n_);
  for (Eigen::Index j = 1; j <= coeffs_.size(); ++j) {
    for (Eigen::Index r = j; r < n_; ++r) t(r, r - j) = -coeffs_(j - 1);
  }
  return t;
}

WhiteningStats whitening_stats(const WhiteningOperator& op, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return {op.energy(), op.transformed_ones().dot(op.apply(x))};
}

ArNoiseModel fit_ar_yule_walker(const Eigen::VectorXd& samples, Eigen::Index order) {
  if (order < 0) throw ValidationError("AR order must be nonnegative");
  const Eigen::Index n = samples.size();
  if (n <= 10 * (order + 1)) throw ValidationError("too few samples for the requested AR order");

  const Eigen::VectorXd centered = samples.array() - samples.mean();
  Eigen::VectorXd r(order + 1);
  for (Eigen::Index k = 0; k <= order; ++k) {
    r(k) = centered.head(n - k).dot(centered.tail(n - k)) / static_cast<double>(n);
  }
  if (!(r(0) > 0.0)) throw RankError("constant input: autocovariance system is singular");
  if (order == 0) return ArNoiseModel::white(r(0));

  Eigen::MatrixXd toeplitz(order, order);
  for (Eigen::Index i = 0; i < order; ++i) {
    for (Eigen::Index j = 0; j < order; ++j) toeplitz(i, j) = r(std::abs(i - j));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(toeplitz);
  if (llt.info() != Eigen::Success) throw RankError("autocovariance matrix is not positive definite");
  const Eigen::VectorXd alpha = llt.solve(r.tail(order));
  const double sigma2 = r(0) - alpha.dot(r.tail(order));
  if (!(sigma2 > 0.0)) throw RankError("fitted innovation variance is not positive");
  return ArNoiseModel(alpha, sigma2);
}

}  // namespace fdi
