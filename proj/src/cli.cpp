#include "fdi/cli.hpp"

#include "fdi/config.hpp"
#include "fdi/csv.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace fdi::cli {
namespace {

bool write_text(const std::filesystem::path& path, const std::string& text, std::ostream& err) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << text;
  file.close();
  if (!file) {
    err << "error: cannot write '" << path.string() << "'\n";
    return false;
  }
  return true;
}

void print_auc_table(const std::vector<RocCurve>& curves, std::ostream& out) {
  out << "detector  auc\n";
  for (const auto& c : curves) out << to_string(c.detector) << "  " << format_double(c.auc) << '\n';
}

std::vector<RocCurve> all_curves(const ScoreTable& table) {
  std::vector<RocCurve> curves;
  for (DetectorKind d : table.detectors()) curves.push_back(roc_from_scores(table, d));
  return curves;
}

void print_vector(std::ostream& out, const char* label, const Eigen::VectorXd& v) {
  out << label;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i == 0 ? " " : ",") << format_double(v(i));
  out << '\n';
}

}  // namespace

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(args.config);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  }
  if (args.seed) cfg.scenario.master_seed = *args.seed;
  const auto path = args.out ? args.out : cfg.scores_path;
  if (!path) {
    err << "config error: output.scores: no output path (pass --out)\n";
    return kUsageError;
  }

  try {
    const ScoreTable table = run_experiment(cfg.scenario, args.threads);
    std::ostringstream csv;
    write_scores_csv(csv, table);
    if (!write_text(*path, csv.str(), err)) return kRuntimeError;
    print_auc_table(all_curves(table), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

int cmd_roc(const std::filesystem::path& scores, const std::filesystem::path& roc_out, std::ostream& out,
            std::ostream& err) {
  std::ifstream in(scores, std::ios::binary);
  if (!in) {
    err << "error: cannot read '" << scores.string() << "'\n";
    return kUsageError;
  }
  std::ostringstream text;
  text << in.rdbuf();

  std::vector<RocCurve> curves;
  try {
    curves = all_curves(read_scores_csv(text.str()));
    if (curves.empty()) throw ParseError(1, 0, "no score rows");
  } catch (const Error& e) {
    err << "malformed scores: " << e.what() << '\n';
    return kUsageError;
  }

  std::ostringstream csv;
  write_roc_csv(csv, curves);
  if (!write_text(roc_out, csv.str(), err)) return kRuntimeError;
  print_auc_table(curves, out);
  return kOk;
}

int cmd_gen_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, const std::filesystem::path& path,
                   std::ostream& out, std::ostream& err) {
  if (cols < 1 || rows <= cols) {
    err << "error: need rows > cols >= 1 (got " << rows << " x " << cols << ")\n";
    return kUsageError;
  }
  try {
    if (!write_text(path, format_matrix(synthetic_jacobian(rows, cols, seed)), err)) return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  out << "wrote " << rows << " x " << cols << " matrix to " << path.string() << '\n';
  return kOk;
}

int cmd_estimate(const std::filesystem::path& config, std::optional<std::uint64_t> seed, std::ostream& out,
                 std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  }
  if (seed) cfg.scenario.master_seed = *seed;

  try {
    const Experiment experiment(cfg.scenario);
    const auto& s = experiment.scenario();
    const TrialData data = experiment.simulate(0, Hypothesis::H0);
    const auto gaussian = wls_estimate_sequential(*s.system, innovation_variances(s.noise), data.observations);
    const auto ar = ar_mle_estimate(*s.system, s.noise, data.observations);
    print_vector(out, "theta", data.theta);
    print_vector(out, std::string(to_string(gaussian.method)).c_str(), gaussian.theta_hat);
    print_vector(out, std::string(to_string(ar.method)).c_str(), ar.theta_hat);
    out << "mse " << to_string(gaussian.method) << ' '
        << format_double(mse_eval(data.observations, s.system->jacobian(), gaussian)) << '\n';
    out << "mse " << to_string(ar.method) << ' '
        << format_double(mse_eval(data.observations, s.system->jacobian(), ar)) << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"False data injection detection under AR noise"};
  app.require_subcommand(1);

  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-matrix", "Write a seeded standard-normal measurement matrix");
  gen->add_option("--rows", rows, "M")->required();
  gen->add_option("--cols", cols, "K")->required();
  gen->add_option("--seed", gen_seed, "RNG seed")->required();
  gen->add_option("--out", gen_out, "Output matrix file")->required();

  SimulateArgs sim;
  std::string sim_config;
  std::string sim_out;
  std::uint64_t sim_seed = 0;
  sim.threads = std::max(1u, std::thread::hardware_concurrency());
  auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo experiment and write a scores CSV");
  simulate->add_option("--config", sim_config, "Experiment config (JSON)")->required();
  auto* sim_out_opt = simulate->add_option("--out", sim_out, "Scores CSV");
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "Override run.master_seed");
  simulate->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string roc_scores;
  std::string roc_out;
  auto* roc = app.add_subcommand("roc", "Compute ROC curves and AUC from a scores CSV");
  roc->add_option("--scores", roc_scores, "Scores CSV")->required();
  roc->add_option("--out", roc_out, "ROC CSV")->required();

  std::string est_config;
  std::uint64_t est_seed = 0;
  auto* estimate = app.add_subcommand("estimate", "Estimate the state of one simulated block with both estimators");
  estimate->add_option("--config", est_config, "Experiment config (JSON)")->required();
  auto* est_seed_opt = estimate->add_option("--seed", est_seed, "Override run.master_seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }

  if (*gen) return cmd_gen_matrix(rows, cols, gen_seed, gen_out, out, err);
  if (*simulate) {
    sim.config = sim_config;
    if (*sim_out_opt) sim.out = sim_out;
    if (*sim_seed_opt) sim.seed = sim_seed;
    return cmd_simulate(sim, out, err);
  }
  if (*roc) return cmd_roc(roc_scores, roc_out, out, err);
  if (*estimate) {
    std::optional<std::uint64_t> seed;
    if (*est_seed_opt) seed = est_seed;
    return cmd_estimate(est_config, seed, out, err);
  }
  return kUsageError;
}

}  // namespace fdi::cli
