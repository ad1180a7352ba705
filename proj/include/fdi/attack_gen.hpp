#pragma once

#include "fdi/estimation.hpp"
#include "fdi/grid_model.hpp"
#include "fdi/rng.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>

namespace fdi {

enum class AttackKind { None, Sparse, Unobservable, Ica };

std::string_view to_string(AttackKind kind);
std::optional<AttackKind> parse_attack_kind(std::string_view name);

struct AttackVector {
  Eigen::VectorXd a;  // M
  AttackKind kind = AttackKind::None;
  Eigen::Index sparsity = 0;  // nonzero count
  double magnitude = 0.0;

  static AttackVector none(Eigen::Index m) { return {Eigen::VectorXd::Zero(m), AttackKind::None, 0, 0.0}; }
};

/// Constant injection of `magnitude` on `count` distinct meters drawn uniformly without replacement.
AttackVector sparse_attack(Eigen::Index meters, Eigen::Index count, double magnitude, Rng& rng);

/// a = H theta_a, invisible to any residual-based detector.
AttackVector unobservable_attack(const MeasurementMatrix& mm, const Eigen::VectorXd& theta_a);

struct IcaOptions {
  double eig_threshold = 1e-6;  // relative to the largest covariance eigenvalue
  double tol = 1e-8;
  int max_iter = 500;
};

enum class IcaConvergence { Converged, MaxIter };

/// Result of FastICA on an M x N block: X_c ~= mixing * sources in the retained subspace.
struct IcaModel {
  Eigen::MatrixXd mixing;     // G, M x r
  Eigen::MatrixXd sources;    // Y, r x N, unit variance rows
  Eigen::MatrixXd weights;    // r x r orthogonal unmixing in whitened coordinates
  Eigen::MatrixXd whitening;  // r x M
  Eigen::VectorXd mean;       // M
  IcaConvergence convergence = IcaConvergence::MaxIter;
  int iterations = 0;

  Eigen::Index components() const noexcept { return mixing.cols(); }
};

/// Symmetric FastICA with the tanh contrast. Rows are centered and whitened through the
/// covariance eigendecomposition; directions with eigenvalue below
/// eig_threshold * (largest eigenvalue) are dropped before the fixed-point iteration.
/// Throws ValidationError on zero-variance input or when N < 2.
IcaModel fastica(const ObservationBlock& obs, const IcaOptions& options, Rng& rng);

/// Stealth attack built from the attacker's own ICA of a clean window:
/// a = magnitude * G * dy with dy ~ N(0, sigma_y2 I_r).
AttackVector ica_attack(const ObservationBlock& clean_window, double sigma_y2, double magnitude, Rng& rng,
                        const IcaOptions& options = {});

}  // namespace fdi
