#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fdi {

struct Bus {
  int id = 0;
  bool is_slack = false;
};

struct Branch {
  int from = 0;
  int to = 0;
  double reactance = 0.0;  // per unit, > 0
};

/// Bus/branch topology of a DC network. Always valid once constructed: exactly one
/// slack bus, unique bus ids, branches referencing known buses, connected graph.
class GridCase {
 public:
  /// Throws ValidationError when any invariant fails.
  GridCase(std::vector<Bus> buses, std::vector<Branch> branches);

  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  int slack_id() const noexcept { return buses_[slack_index_].id; }

  /// Position of a bus id in buses(), or -1 when absent.
  int bus_index(int id) const noexcept;

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::size_t slack_index_ = 0;
};

/// Flow on branches()[branch]; forward means from -> to.
struct FlowMeter {
  std::size_t branch = 0;
  bool forward = true;
};

struct InjectionMeter {
  int bus = 0;
};

using MeterDescriptor = std::variant<FlowMeter, InjectionMeter>;

/// Ordered meter list; entry i becomes row i of H.
struct MeterPlan {
  std::vector<MeterDescriptor> entries;

  /// Both directed flows on every branch followed by an injection at every bus.
  static MeterPlan all_meters(const GridCase& grid);
};

/// The M x K measurement Jacobian H together with an orthonormal basis B of the
/// orthogonal complement of its column space. Immutable.
class MeasurementMatrix {
 public:
  /// Validates rank(H) = K < M and computes B. Throws DimensionError or RankError.
  explicit MeasurementMatrix(Eigen::MatrixXd jacobian);

  const Eigen::MatrixXd& jacobian() const noexcept { return h_; }
  const Eigen::MatrixXd& complement() const noexcept { return b_; }
  Eigen::Index rows() const noexcept { return h_.rows(); }
  Eigen::Index cols() const noexcept { return h_.cols(); }
  Eigen::Index dof() const noexcept { return h_.rows() - h_.cols(); }

  /// argmin_theta ||x - H theta||, i.e. (H^T H)^{-1} H^T x.
  Eigen::VectorXd least_squares(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Eigen::MatrixXd h_;
  Eigen::MatrixXd b_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

struct AttackDecomposition {
  Eigen::VectorXd theta_a;  // K
  Eigen::VectorXd theta_b;  // M - K

  /// True when the attack lies in the column space of H (theta_b vanishes).
  bool unobservable(double tolerance) const { return theta_b.lpNorm<Eigen::Infinity>() <= tolerance; }
};

/// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;

/// Numerical rank with singular values below kRankTolerance * sigma_max treated as zero.
Eigen::Index numerical_rank(const Eigen::MatrixXd& a);

/// Orthonormal M x (M - K) basis of the complement of range(H). Sign and rotation
/// are not canonical. Throws RankError when rank(H) < K.
Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& h);

/// Parses the line-oriented case format (`bus <id> [slack]`, `branch <from> <to> <x>`, `#` comments).
GridCase parse_case(std::string_view text);

/// DC measurement Jacobian over the non-slack bus angles (K = nbus - 1).
MeasurementMatrix build_dc_jacobian(const GridCase& grid, const MeterPlan& plan);

/// Reads `<M> <K>` followed by M rows of K numbers.
MeasurementMatrix load_matrix(std::string_view text);

/// Inverse of load_matrix for a bare matrix; 17 significant digits per entry.
std::string format_matrix(const Eigen::MatrixXd& h);

/// a = H theta_a + B theta_b with theta_a = (H^T H)^{-1} H^T a and theta_b = B^T a.
AttackDecomposition decompose_attack(const MeasurementMatrix& mm, const Eigen::VectorXd& a);

}  // namespace fdi
