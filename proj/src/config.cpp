#include "fdi/config.hpp"

#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>

namespace fdi {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

const json& require_object(const json& doc, const std::string& key) {
  if (!doc.is_object()) fail(key, "expected an object");
  return doc;
}

void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
  for (const auto& [name, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || name == a;
    if (!known) fail(prefix.empty() ? name : prefix + "." + name, "unknown key");
  }
}

std::string join(const std::string& prefix, const char* key) { return prefix.empty() ? key : prefix + "." + key; }

double get_number(const json& obj, const std::string& prefix, const char* key, std::optional<double> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(join(prefix, key), "missing");
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(join(prefix, key), "expected a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& prefix, const char* key,
                         std::optional<std::int64_t> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(join(prefix, key), "missing");
  }
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(prefix, key), "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_seed(const json& obj, const std::string& prefix, const char* key) {
  if (!obj.contains(key)) fail(join(prefix, key), "missing");
  const auto& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  fail(join(prefix, key), "expected a nonnegative integer");
}

std::string get_string(const json& obj, const std::string& prefix, const char* key) {
  if (!obj.contains(key)) fail(join(prefix, key), "missing");
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(join(prefix, key), "expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vector(const json& obj, const std::string& prefix, const char* key) {
  if (!obj.contains(key)) return {};
  const auto& v = obj.at(key);
  if (!v.is_array()) fail(join(prefix, key), "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(join(prefix, key), "expected an array of numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

std::string read_file(const std::filesystem::path& path, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(key, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<const MeasurementMatrix> parse_system(const json& sys, const std::filesystem::path& base_dir) {
  require_object(sys, "system");
  reject_unknown(sys, "system", {"source", "path", "dims"});
  const std::string source = get_string(sys, "system", "source");
  try {
    if (source == "synthetic") {
      if (!sys.contains("dims")) fail("system.dims", "missing");
      const auto& dims = require_object(sys.at("dims"), "system.dims");
      reject_unknown(dims, "system.dims", {"m", "k", "seed"});
      const auto m = get_integer(dims, "system.dims", "m");
      const auto k = get_integer(dims, "system.dims", "k");
      if (k < 1 || m <= k) fail("system.dims", "need m > k >= 1");
      return std::make_shared<const MeasurementMatrix>(synthetic_jacobian(m, k, get_seed(dims, "system.dims", "seed")));
    }
    if (source == "matrix" || source == "case") {
      const std::filesystem::path path = base_dir / get_string(sys, "system", "path");
      const std::string text = read_file(path, "system.path");
      if (source == "matrix") return std::make_shared<const MeasurementMatrix>(load_matrix(text));
      const GridCase grid = parse_case(text);
      return std::make_shared<const MeasurementMatrix>(build_dc_jacobian(grid, MeterPlan::all_meters(grid)));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail("system", e.what());
  }
  fail("system.source", "expected 'synthetic', 'matrix' or 'case', got '" + source + "'");
}

}  // namespace

Eigen::MatrixXd synthetic_jacobian(Eigen::Index m, Eigen::Index k, std::uint64_t seed) {
  if (k < 1 || m <= k) throw DimensionError("synthetic matrix needs M > K >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd h(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) h(i, j) = normal(rng);
  }
  if (numerical_rank(h) < k) throw RankError("generated matrix is rank deficient; choose another seed");
  return h;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) fail("(root)", "expected an object");
  reject_unknown(doc, "", {"system", "state", "noise", "attack", "run", "output"});
  for (const char* section : {"system", "noise", "run"}) {
    if (!doc.contains(section)) fail(section, "missing");
  }

  ExperimentConfig cfg;
  Scenario& s = cfg.scenario;
  s.system = parse_system(doc.at("system"), base_dir);
  const Eigen::Index m = s.system->rows();
  const Eigen::Index k = s.system->cols();

  // state
  s.theta = Eigen::VectorXd::Ones(k);
  if (doc.contains("state")) {
    const auto& st = require_object(doc.at("state"), "state");
    reject_unknown(st, "state", {"values", "default", "perturbation_rho"});
    if (st.contains("values") && st.contains("default")) fail("state", "give either 'values' or 'default'");
    if (st.contains("default") && !st.at("default").is_boolean()) fail("state.default", "expected a boolean");
    if (st.contains("values")) {
      s.theta = get_vector(st, "state", "values");
      if (s.theta.size() != k) fail("state.values", "expected " + std::to_string(k) + " entries");
    }
    s.perturbation_rho = get_number(st, "state", "perturbation_rho", 0.0);
    if (!(s.perturbation_rho >= 0.0)) fail("state.perturbation_rho", "must be nonnegative");
  }

  // noise
  {
    const auto& nz = require_object(doc.at("noise"), "noise");
    reject_unknown(nz, "noise", {"order", "coeffs", "sigma2", "burn_in"});
    const auto order = get_integer(nz, "noise", "order");
    if (order < 0) fail("noise.order", "must be nonnegative");
    const Eigen::VectorXd coeffs = get_vector(nz, "noise", "coeffs");
    if (coeffs.size() != order) fail("noise.coeffs", "expected " + std::to_string(order) + " coefficients");
    const double sigma2 = get_number(nz, "noise", "sigma2");
    if (!(sigma2 > 0.0)) fail("noise.sigma2", "must be positive");
    s.burn_in = get_integer(nz, "noise", "burn_in", 0);
    if (s.burn_in < 0) fail("noise.burn_in", "must be nonnegative");
    s.noise.assign(static_cast<std::size_t>(m), ArNoiseModel(coeffs, sigma2));
  }

  // attack
  if (doc.contains("attack")) {
    const auto& at = require_object(doc.at("attack"), "attack");
    reject_unknown(at, "attack", {"kind", "magnitude", "d", "sigma_y2", "fixed"});
    const std::string kind = get_string(at, "attack", "kind");
    const auto parsed = parse_attack_kind(kind);
    if (!parsed) fail("attack.kind", "expected none, sparse, unobservable or ica, got '" + kind + "'");
    s.attack.kind = *parsed;
    s.attack.magnitude = get_number(at, "attack", "magnitude", 1.0);
    if (s.attack.kind == AttackKind::Sparse) {
      s.attack.sparsity = get_integer(at, "attack", "d");
      if (s.attack.sparsity < 0 || s.attack.sparsity > m) fail("attack.d", "must lie in [0, " + std::to_string(m) + "]");
    }
    if (s.attack.kind == AttackKind::Ica) {
      s.attack.sigma_y2 = get_number(at, "attack", "sigma_y2");
      if (!(s.attack.sigma_y2 >= 0.0)) fail("attack.sigma_y2", "must be nonnegative");
    }
    if (at.contains("fixed")) {
      if (!at.at("fixed").is_boolean()) fail("attack.fixed", "expected a boolean");
      s.attack.fixed = at.at("fixed").get<bool>();
    }
  }

  // run
  {
    const auto& run = require_object(doc.at("run"), "run");
    reject_unknown(run, "run", {"n", "trials", "detectors", "master_seed"});
    s.samples = get_integer(run, "run", "n");
    if (s.samples < 1) fail("run.n", "must be at least 1");
    s.trials = get_integer(run, "run", "trials", 1000);
    if (s.trials < 1) fail("run.trials", "must be at least 1");
    s.master_seed = get_seed(run, "run", "master_seed");
    if (run.contains("detectors")) {
      const auto& dets = run.at("detectors");
      if (!dets.is_array() || dets.empty()) fail("run.detectors", "expected a nonempty array");
      s.detectors.clear();
      for (const auto& d : dets) {
        const auto kind = d.is_string() ? parse_detector(d.get<std::string>()) : std::nullopt;
        if (!kind || (*kind != DetectorKind::White && *kind != DetectorKind::Gaussian && *kind != DetectorKind::Ar)) {
          fail("run.detectors", "expected entries from {white, gaussian, ar}");
        }
        if (std::find(s.detectors.begin(), s.detectors.end(), *kind) != s.detectors.end()) {
          fail("run.detectors", "duplicate detector '" + d.get<std::string>() + "'");
        }
        s.detectors.push_back(*kind);
      }
    }
  }

  if (doc.contains("output")) {
    const auto& out = require_object(doc.at("output"), "output");
    reject_unknown(out, "output", {"scores"});
    if (out.contains("scores")) cfg.scores_path = base_dir / get_string(out, "output", "scores");
  }

  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path, "config");
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc, path.parent_path());
}

}  // namespace fdi
