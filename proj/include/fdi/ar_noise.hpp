#pragma once

#include "fdi/rng.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fdi {

/// Per-meter AR(p) noise: w[n] = sum_j coeffs[j-1] * w[n-j] + v[n], v ~ N(0, sigma2).
/// initial_conditions[k-1] holds w[-k].
class ArNoiseModel {
 public:
  ArNoiseModel(Eigen::VectorXd coeffs, double innovation_variance);
  ArNoiseModel(Eigen::VectorXd coeffs, double innovation_variance, Eigen::VectorXd initial_conditions);

  /// AR(0), i.e. white Gaussian noise.
  static ArNoiseModel white(double variance) { return ArNoiseModel(Eigen::VectorXd(), variance); }

  Eigen::Index order() const noexcept { return coeffs_.size(); }
  const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
  double innovation_variance() const noexcept { return sigma2_; }
  const Eigen::VectorXd& initial_conditions() const noexcept { return initial_; }

  /// All roots of 1 - sum_j a_j z^j lie strictly outside the unit circle.
  bool is_stationary() const;

 private:
  Eigen::VectorXd coeffs_;
  double sigma2_;
  Eigen::VectorXd initial_;
};

/// Draws n samples, discarding `burn_in` leading samples of the recursion.
Eigen::VectorXd simulate_ar(const ArNoiseModel& model, Eigen::Index n, Rng& rng, Eigen::Index burn_in = 0);

/// Same recursion driven by caller-supplied innovations; the output has innovations.size() samples.
Eigen::VectorXd ar_filter(const ArNoiseModel& model, const Eigen::VectorXd& innovations);

/// The conditional-likelihood whitening map x -> T x + c for an N-sample window.
/// T is unit lower triangular with -a_j on the j-th subdiagonal and is stored as its band.
class WhiteningOperator {
 public:
  WhiteningOperator(const ArNoiseModel& model, Eigen::Index n);

  Eigen::Index size() const noexcept { return n_; }
  Eigen::Index bandwidth() const noexcept { return coeffs_.size(); }
  const Eigen::VectorXd& offset() const noexcept { return c_; }

  /// T 1_N.
  const Eigen::VectorXd& transformed_ones() const noexcept { return t_ones_; }

  /// 1^T T^T T 1.
  double energy() const noexcept { return a_; }

  /// T x + c.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Dense T, for tests and diagnostics.
  Eigen::MatrixXd dense() const;

 private:
  Eigen::Index n_;
  Eigen::VectorXd coeffs_;
  Eigen::VectorXd c_;
  Eigen::VectorXd t_ones_;
  double a_;
};

inline WhiteningOperator build_whitening(const ArNoiseModel& model, Eigen::Index n) {
  return WhiteningOperator(model, n);
}

struct WhiteningStats {
  double a;  // 1^T T^T T 1
  double z;  // 1^T T^T (T x + c)
};

WhiteningStats whitening_stats(const WhiteningOperator& op, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Yule-Walker fit of an AR(p) model from biased sample autocovariances.
/// Throws RankError when the autocovariance system is singular (e.g. constant input).
ArNoiseModel fit_ar_yule_walker(const Eigen::VectorXd& samples, Eigen::Index order);

}  // namespace fdi
