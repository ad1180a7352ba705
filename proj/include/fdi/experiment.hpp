#pragma once

#include "fdi/ar_noise.hpp"
#include "fdi/attack_gen.hpp"
#include "fdi/detection.hpp"
#include "fdi/estimation.hpp"
#include "fdi/grid_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace fdi {

enum class Hypothesis { H0, H1 };

std::string_view to_string(Hypothesis h);
std::optional<Hypothesis> parse_hypothesis(std::string_view name);

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  double magnitude = 1.0;
  Eigen::Index sparsity = 0;  // sparse attacks only
  double sigma_y2 = 0.0;      // ICA attacks only
  bool fixed = false;         // reuse one attack draw for every trial (debugging aid)
};

/// One Monte-Carlo study. `detectors` may contain White (unweighted GLRT on the sample
/// means), Gaussian (the sequential Gaussian GLRT) and Ar.
struct Scenario {
  std::shared_ptr<const MeasurementMatrix> system;
  Eigen::VectorXd theta;
  std::vector<ArNoiseModel> noise;  // one model per meter
  Eigen::Index burn_in = 0;
  Eigen::Index samples = 20;
  AttackSpec attack;
  std::vector<DetectorKind> detectors{DetectorKind::Gaussian, DetectorKind::Ar};
  Eigen::Index trials = 1000;
  std::uint64_t master_seed = 0;
  double perturbation_rho = 0.0;
  IcaOptions ica;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

struct TrialScore {
  DetectorKind detector;
  double statistic;
};

/// Everything one trial draws: the state used, the injected attack and the observed block.
struct TrialData {
  Eigen::VectorXd theta;
  AttackVector attack;
  ObservationBlock observations;
};

struct ScoreRow {
  Eigen::Index trial;
  DetectorKind detector;
  Hypothesis hypothesis;
  double statistic;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;

  std::vector<double> scores(DetectorKind detector, Hypothesis hypothesis) const;
  std::vector<DetectorKind> detectors() const;  // in first-appearance order
};

/// Multiplies each component by an independent draw from U[1 - rho, 1 + rho].
Eigen::VectorXd perturb_states(const Eigen::VectorXd& theta, double rho, Rng& rng);

/// Scenario with its detectors factored once; trials are pure functions of
/// (master_seed, trial index, hypothesis) and may run on any thread.
class Experiment {
 public:
  explicit Experiment(Scenario scenario);

  const Scenario& scenario() const noexcept { return scenario_; }

  TrialData simulate(Eigen::Index trial, Hypothesis hypothesis) const;
  std::vector<TrialScore> evaluate(const ObservationBlock& obs) const;
  std::vector<TrialScore> run_trial(Eigen::Index trial, Hypothesis hypothesis) const;

  /// All trials under both hypotheses. Row order is trial-major, H0 before H1,
  /// detectors in scenario order, independent of `threads`.
  ScoreTable run(unsigned threads = 1) const;

 private:
  AttackVector draw_attack(Eigen::Index trial, Hypothesis hypothesis, const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd draw_noise(Eigen::Index trial, Hypothesis hypothesis, std::uint64_t stream) const;

  Scenario scenario_;
  Eigen::VectorXd variances_;
  std::optional<GaussianDetector> gaussian_;
  std::optional<ArDetector> ar_;
};

std::vector<TrialScore> run_trial(const Scenario& scenario, Eigen::Index trial, Hypothesis hypothesis);
ScoreTable run_experiment(const Scenario& scenario, unsigned threads = 1);

struct RocPoint {
  double threshold;
  double pfa;
  double pd;
};

/// Operating points ordered by increasing threshold, starting at (1, 1) for
/// threshold -inf and ending at (0, 0) for the largest pooled score.
struct RocCurve {
  DetectorKind detector;
  std::vector<RocPoint> points;
  double auc;
};

RocCurve roc_from_scores(const ScoreTable& table, DetectorKind detector);
RocCurve roc_from_scores(std::vector<double> null_scores, std::vector<double> alt_scores, DetectorKind detector);

/// (1/N) sum_n ||x_n - H theta_hat|| over the block's columns; squared norms when `squared`.
double mse_eval(const ObservationBlock& obs, const Eigen::MatrixXd& h, const StateEstimate& estimate,
                bool squared = false);

}  // namespace fdi
