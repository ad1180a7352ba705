#include "fdi/experiment.hpp"

#include "fdi/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace fdi {
namespace {

// Independent random streams within one trial.
enum Stream : std::uint64_t { kNoise = 1, kAttack = 2, kState = 3, kWindow = 4 };

std::uint64_t hypothesis_tag(Hypothesis h) { return h == Hypothesis::H0 ? 0 : 1; }

}  // namespace

std::string_view to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

std::optional<Hypothesis> parse_hypothesis(std::string_view name) {
  if (name == "H0") return Hypothesis::H0;
  if (name == "H1") return Hypothesis::H1;
  return std::nullopt;
}

void Scenario::validate() const {
  if (!system) throw ValidationError("system: no measurement matrix");
  const Eigen::Index m = system->rows();
  if (theta.size() != system->cols()) throw ValidationError("state: expected " + std::to_string(system->cols()) + " values");
  if (static_cast<Eigen::Index>(noise.size()) != m) throw ValidationError("noise: expected one model per meter");
  if (burn_in < 0) throw ValidationError("noise.burn_in: must be nonnegative");
  if (samples < 1) throw ValidationError("run.n: must be at least 1");
  if (trials < 1) throw ValidationError("run.trials: must be at least 1");
  if (detectors.empty()) throw ValidationError("run.detectors: at least one detector is required");
  if (!(perturbation_rho >= 0.0)) throw ValidationError("state.perturbation_rho: must be nonnegative");
  if (!std::isfinite(attack.magnitude)) throw ValidationError("attack.magnitude: must be finite");
  switch (attack.kind) {
    case AttackKind::Sparse:
      if (attack.sparsity < 0 || attack.sparsity > m) throw ValidationError("attack.d: must lie in [0, M]");
      break;
    case AttackKind::Ica:
      if (!(attack.sigma_y2 >= 0.0)) throw ValidationError("attack.sigma_y2: must be nonnegative");
      if (samples < 2) throw ValidationError("run.n: ICA attacks need at least 2 samples");
      break;
    default: break;
  }
}

Eigen::VectorXd perturb_states(const Eigen::VectorXd& theta, double rho, Rng& rng) {
  if (!(rho >= 0.0)) throw ValidationError("perturbation half-width must be nonnegative");
  std::uniform_real_distribution<double> scale(1.0 - rho, 1.0 + rho);
  Eigen::VectorXd out = theta;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) *= rho == 0.0 ? 1.0 : scale(rng);
  return out;
}

Experiment::Experiment(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  variances_ = innovation_variances(scenario_.noise);
  for (DetectorKind kind : scenario_.detectors) {
    if (kind == DetectorKind::Gaussian || kind == DetectorKind::GaussianSequential) {
      if (!gaussian_) gaussian_.emplace(*scenario_.system, variances_);
    } else if (kind == DetectorKind::Ar) {
      if (!ar_) ar_.emplace(*scenario_.system, scenario_.noise, scenario_.samples);
    }
  }
}

Eigen::MatrixXd Experiment::draw_noise(Eigen::Index trial, Hypothesis hypothesis, std::uint64_t stream) const {
  const auto& s = scenario_;
  Eigen::MatrixXd w(s.system->rows(), s.samples);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    Rng rng = make_rng({s.master_seed, static_cast<std::uint64_t>(trial), hypothesis_tag(hypothesis), stream,
                        static_cast<std::uint64_t>(i)});
    w.row(i) = simulate_ar(s.noise[static_cast<std::size_t>(i)], s.samples, rng, s.burn_in).transpose();
  }
  return w;
}

AttackVector Experiment::draw_attack(Eigen::Index trial, Hypothesis hypothesis, const Eigen::VectorXd& theta) const {
  const auto& s = scenario_;
  const Eigen::Index m = s.system->rows();
  if (hypothesis == Hypothesis::H0) return AttackVector::none(m);

  const std::uint64_t key = s.attack.fixed ? ~std::uint64_t{0} : static_cast<std::uint64_t>(trial);
  Rng rng = make_rng({s.master_seed, key, hypothesis_tag(hypothesis), kAttack});
  switch (s.attack.kind) {
    case AttackKind::None: return AttackVector::none(m);
    case AttackKind::Sparse: return sparse_attack(m, s.attack.sparsity, s.attack.magnitude, rng);
    case AttackKind::Unobservable: {
      std::normal_distribution<double> normal;
      Eigen::VectorXd theta_a(s.system->cols());
      for (Eigen::Index k = 0; k < theta_a.size(); ++k) theta_a(k) = s.attack.magnitude * normal(rng);
      return unobservable_attack(*s.system, theta_a);
    }
    case AttackKind::Ica: {
      // The attacker sees a clean window of the same system before injecting.
      const Eigen::VectorXd clean = s.system->jacobian() * theta;
      Eigen::MatrixXd window = draw_noise(key, hypothesis, kWindow);
      window.colwise() += clean;
      return ica_attack(ObservationBlock(std::move(window)), s.attack.sigma_y2, s.attack.magnitude, rng, s.ica);
    }
  }
  return AttackVector::none(m);
}

TrialData Experiment::simulate(Eigen::Index trial, Hypothesis hypothesis) const {
  const auto& s = scenario_;
  Eigen::VectorXd theta = s.theta;
  if (s.perturbation_rho > 0.0) {
    Rng rng = make_rng({s.master_seed, static_cast<std::uint64_t>(trial), hypothesis_tag(hypothesis), kState});
    theta = perturb_states(s.theta, s.perturbation_rho, rng);
  }
  AttackVector attack = draw_attack(trial, hypothesis, theta);
  Eigen::MatrixXd x = draw_noise(trial, hypothesis, kNoise);
  x.colwise() += s.system->jacobian() * theta + attack.a;
  return {std::move(theta), std::move(attack), ObservationBlock(std::move(x))};
}

std::vector<TrialScore> Experiment::evaluate(const ObservationBlock& obs) const {
  std::vector<TrialScore> out;
  out.reserve(scenario_.detectors.size());
  for (DetectorKind kind : scenario_.detectors) {
    switch (kind) {
      case DetectorKind::White:
        out.push_back({kind, glrt_white(*scenario_.system, obs.row_means()).statistic.value});
        break;
      case DetectorKind::Gaussian:
      case DetectorKind::GaussianSequential:
        out.push_back({kind, gaussian_->evaluate_sequential(obs).value});
        break;
      case DetectorKind::Ar:
        out.push_back({kind, ar_->evaluate(obs).statistic.value});
        break;
    }
  }
  return out;
}

std::vector<TrialScore> Experiment::run_trial(Eigen::Index trial, Hypothesis hypothesis) const {
  return evaluate(simulate(trial, hypothesis).observations);
}

ScoreTable Experiment::run(unsigned threads) const {
  const auto tasks = static_cast<std::size_t>(2 * scenario_.trials);
  std::vector<std::vector<TrialScore>> results(tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      try {
        const auto trial = static_cast<Eigen::Index>(t / 2);
        results[t] = run_trial(trial, t % 2 == 0 ? Hypothesis::H0 : Hypothesis::H1);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks;
      }
    }
  };

  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks)));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned i = 0; i < count; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ScoreTable table;
  table.rows.reserve(tasks * scenario_.detectors.size());
  for (std::size_t t = 0; t < tasks; ++t) {
    const Hypothesis h = t % 2 == 0 ? Hypothesis::H0 : Hypothesis::H1;
    for (const TrialScore& score : results[t]) {
      table.rows.push_back({static_cast<Eigen::Index>(t / 2), score.detector, h, score.statistic});
    }
  }
  return table;
}

std::vector<TrialScore> run_trial(const Scenario& scenario, Eigen::Index trial, Hypothesis hypothesis) {
  return Experiment(scenario).run_trial(trial, hypothesis);
}

ScoreTable run_experiment(const Scenario& scenario, unsigned threads) { return Experiment(scenario).run(threads); }

std::vector<double> ScoreTable::scores(DetectorKind detector, Hypothesis hypothesis) const {
  std::vector<double> out;
  for (const auto& row : rows) {
    if (row.detector == detector && row.hypothesis == hypothesis) out.push_back(row.statistic);
  }
  return out;
}

std::vector<DetectorKind> ScoreTable::detectors() const {
  std::vector<DetectorKind> out;
  for (const auto& row : rows) {
    if (std::find(out.begin(), out.end(), row.detector) == out.end()) out.push_back(row.detector);
  }
  return out;
}

RocCurve roc_from_scores(std::vector<double> null_scores, std::vector<double> alt_scores, DetectorKind detector) {
  if (null_scores.empty() || alt_scores.empty()) {
    throw ValidationError("ROC needs scores under both H0 and H1 for detector " + std::string(to_string(detector)));
  }
  std::sort(null_scores.begin(), null_scores.end());
  std::sort(alt_scores.begin(), alt_scores.end());

  std::vector<double> thresholds;
  thresholds.reserve(null_scores.size() + alt_scores.size());
  std::merge(null_scores.begin(), null_scores.end(), alt_scores.begin(), alt_scores.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  auto fraction_above = [](const std::vector<double>& sorted, double tau) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), tau);
    return static_cast<double>(above) / static_cast<double>(sorted.size());
  };

  RocCurve curve{detector, {}, 0.0};
  curve.points.reserve(thresholds.size() + 1);
  curve.points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
  for (double tau : thresholds) {
    curve.points.push_back({tau, fraction_above(null_scores, tau), fraction_above(alt_scores, tau)});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& lo = curve.points[i];
    const auto& hi = curve.points[i - 1];
    curve.auc += (hi.pfa - lo.pfa) * 0.5 * (hi.pd + lo.pd);
  }
  return curve;
}

RocCurve roc_from_scores(const ScoreTable& table, DetectorKind detector) {
  return roc_from_scores(table.scores(detector, Hypothesis::H0), table.scores(detector, Hypothesis::H1), detector);
}

double mse_eval(const ObservationBlock& obs, const Eigen::MatrixXd& h, const StateEstimate& estimate, bool squared) {
  if (obs.meters() != h.rows() || estimate.theta_hat.size() != h.cols()) {
    throw DimensionError("observation block, H and estimate disagree in size");
  }
  const Eigen::VectorXd fitted = h * estimate.theta_hat;
  double total = 0.0;
  for (Eigen::Index n = 0; n < obs.samples(); ++n) {
    const double r2 = (obs.readings().col(n) - fitted).squaredNorm();
    total += squared ? r2 : std::sqrt(r2);
  }
  return total / static_cast<double>(obs.samples());
}

}  // namespace fdi
