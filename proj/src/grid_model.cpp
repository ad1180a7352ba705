#include "fdi/grid_model.hpp"

#include "fdi/errors.hpp"

#include <charconv>
#include <cstdio>
#include <queue>
#include <unordered_map>

namespace fdi {
namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

// Calls fn(line_number, line) for each line, with `#` comments stripped when requested.
template <typename Fn>
void for_each_line(std::string_view text, bool strip_comments, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty() || line_no == 0) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (strip_comments) {
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    }
    fn(line_no, line);
    if (text.empty()) break;
  }
}

int parse_int(const Token& tok, std::size_t line) {
  int value = 0;
  const auto* end = tok.text.data() + tok.text.size();
  auto [ptr, ec] = std::from_chars(tok.text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(line, tok.column, "expected integer, got '" + std::string(tok.text) + "'");
  }
  return value;
}

double parse_double(const Token& tok, std::size_t line) {
  double value = 0.0;
  std::string_view s = tok.text;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || s.empty()) {
    throw ParseError(line, tok.column, "expected number, got '" + std::string(tok.text) + "'");
  }
  return value;
}

}  // namespace

GridCase::GridCase(std::vector<Bus> buses, std::vector<Branch> branches)
    : buses_(std::move(buses)), branches_(std::move(branches)) {
  if (buses_.empty()) throw ValidationError("case has no buses");

  std::unordered_map<int, std::size_t> index;
  std::size_t slack_count = 0;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (!index.emplace(buses_[i].id, i).second) {
      throw ValidationError("duplicate bus " + std::to_string(buses_[i].id));
    }
    if (buses_[i].is_slack) {
      ++slack_count;
      slack_index_ = i;
    }
  }
  if (slack_count == 0) throw ValidationError("no slack bus");
  if (slack_count > 1) throw ValidationError("more than one slack bus");

  std::vector<std::vector<std::size_t>> adjacency(buses_.size());
  for (const Branch& br : branches_) {
    const auto from = index.find(br.from);
    const auto to = index.find(br.to);
    if (from == index.end() || to == index.end()) {
      throw ValidationError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                            " references unknown bus");
    }
    if (br.from == br.to) throw ValidationError("branch connects bus " + std::to_string(br.from) + " to itself");
    if (!(br.reactance > 0.0)) {
      throw ValidationError("nonpositive reactance on branch " + std::to_string(br.from) + "-" +
                            std::to_string(br.to));
    }
    adjacency[from->second].push_back(to->second);
    adjacency[to->second].push_back(from->second);
  }

  std::vector<bool> seen(buses_.size(), false);
  std::queue<std::size_t> pending;
  pending.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!pending.empty()) {
    const std::size_t u = pending.front();
    pending.pop();
    for (std::size_t v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        pending.push(v);
      }
    }
  }
  if (reached != buses_.size()) throw ValidationError("disconnected network");
}

int GridCase::bus_index(int id) const noexcept {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

MeterPlan MeterPlan::all_meters(const GridCase& grid) {
  MeterPlan plan;
  for (std::size_t b = 0; b < grid.branches().size(); ++b) {
    plan.entries.emplace_back(FlowMeter{b, true});
    plan.entries.emplace_back(FlowMeter{b, false});
  }
  for (const Bus& bus : grid.buses()) plan.entries.emplace_back(InjectionMeter{bus.id});
  return plan;
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cutoff = kRankTolerance * s(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return rank;
}

Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& h) {
  const Eigen::Index m = h.rows();
  const Eigen::Index k = h.cols();
  if (k > m) throw DimensionError("H has more columns than rows");
  if (numerical_rank(h) < k) throw RankError("H is rank deficient");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(h);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(m - k);
}

MeasurementMatrix::MeasurementMatrix(Eigen::MatrixXd jacobian) : h_(std::move(jacobian)) {
  if (h_.cols() < 1) throw DimensionError("H must have at least one column");
  if (h_.rows() <= h_.cols()) {
    throw DimensionError("M <= K is violated (M = " + std::to_string(h_.rows()) +
                         ", K = " + std::to_string(h_.cols()) + ")");
  }
  if (!h_.allFinite()) throw ValidationError("H has non-finite entries");
  b_ = orthogonal_complement(h_);
  qr_.compute(h_);
}

Eigen::VectorXd MeasurementMatrix::least_squares(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != rows()) throw DimensionError("vector length does not match M");
  return qr_.solve(Eigen::VectorXd(x));
}

GridCase parse_case(std::string_view text) {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  for_each_line(text, true, [&](std::size_t line_no, std::string_view line) {
    const auto tokens = tokenize(line);
    if (tokens.empty()) return;
    const std::string_view keyword = tokens[0].text;
    if (keyword == "bus") {
      if (tokens.size() < 2) throw ParseError(line_no, 0, "bus needs an id");
      if (tokens.size() > 3) throw ParseError(line_no, tokens[3].column, "unexpected token");
      Bus bus{parse_int(tokens[1], line_no), false};
      if (tokens.size() == 3) {
        if (tokens[2].text != "slack") {
          throw ParseError(line_no, tokens[2].column, "expected 'slack', got '" + std::string(tokens[2].text) + "'");
        }
        bus.is_slack = true;
      }
      buses.push_back(bus);
    } else if (keyword == "branch") {
      if (tokens.size() < 4) throw ParseError(line_no, 0, "branch needs <from> <to> <reactance>");
      if (tokens.size() > 4) throw ParseError(line_no, tokens[4].column, "unexpected token");
      branches.push_back({parse_int(tokens[1], line_no), parse_int(tokens[2], line_no),
                          parse_double(tokens[3], line_no)});
    } else {
      throw ParseError(line_no, tokens[0].column, "unknown record '" + std::string(keyword) + "'");
    }
  });
  return GridCase(std::move(buses), std::move(branches));
}

MeasurementMatrix build_dc_jacobian(const GridCase& grid, const MeterPlan& plan) {
  const auto& buses = grid.buses();
  const auto& branches = grid.branches();
  const int slack = grid.slack_id();

  // State column for each bus; the slack angle is the reference and has no column.
  std::unordered_map<int, Eigen::Index> column;
  Eigen::Index k = 0;
  for (const Bus& bus : buses) {
    if (bus.id != slack) column.emplace(bus.id, k++);
  }

  const auto m = static_cast<Eigen::Index>(plan.entries.size());
  if (m <= k) {
    throw DimensionError("M <= K is violated (M = " + std::to_string(m) + ", K = " + std::to_string(k) + ")");
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, k);
  auto add_flow = [&](Eigen::Index row, const Branch& br, double sign) {
    const double y = sign / br.reactance;
    if (br.from != slack) h(row, column.at(br.from)) += y;
    if (br.to != slack) h(row, column.at(br.to)) -= y;
  };

  for (Eigen::Index row = 0; row < m; ++row) {
    const auto& entry = plan.entries[static_cast<std::size_t>(row)];
    if (const auto* flow = std::get_if<FlowMeter>(&entry)) {
      if (flow->branch >= branches.size()) {
        throw ValidationError("meter " + std::to_string(row) + " references unknown branch");
      }
      add_flow(row, branches[flow->branch], flow->forward ? 1.0 : -1.0);
    } else {
      const int bus = std::get<InjectionMeter>(entry).bus;
      if (grid.bus_index(bus) < 0) {
        throw ValidationError("meter " + std::to_string(row) + " references unknown bus " + std::to_string(bus));
      }
      for (const Branch& br : branches) {
        if (br.from == bus) add_flow(row, br, 1.0);
        if (br.to == bus) add_flow(row, br, -1.0);
      }
    }
  }

  if (numerical_rank(h) < k) throw RankError("H is rank deficient: meters do not cover every state");
  return MeasurementMatrix(std::move(h));
}

MeasurementMatrix load_matrix(std::string_view text) {
  Eigen::Index m = -1;
  Eigen::Index k = -1;
  Eigen::Index row = 0;
  Eigen::MatrixXd h;
  for_each_line(text, false, [&](std::size_t line_no, std::string_view line) {
    const auto tokens = tokenize(line);
    if (tokens.empty()) return;
    if (m < 0) {
      if (tokens.size() != 2) throw ParseError(line_no, 0, "header must be '<M> <K>'");
      m = parse_int(tokens[0], line_no);
      k = parse_int(tokens[1], line_no);
      if (m < 1 || k < 1) throw DimensionError("matrix dimensions must be positive");
      h.resize(m, k);
      return;
    }
    if (row >= m) throw DimensionError("more than " + std::to_string(m) + " rows in matrix body");
    if (static_cast<Eigen::Index>(tokens.size()) != k) {
      throw DimensionError("row " + std::to_string(row + 1) + " has " + std::to_string(tokens.size()) +
                           " entries, expected " + std::to_string(k));
    }
    for (Eigen::Index j = 0; j < k; ++j) h(row, j) = parse_double(tokens[static_cast<std::size_t>(j)], line_no);
    ++row;
  });
  if (m < 0) throw ParseError(1, 0, "empty matrix file");
  if (row != m) {
    throw DimensionError("matrix body has " + std::to_string(row) + " rows, header says " + std::to_string(m));
  }
  return MeasurementMatrix(std::move(h));
}

std::string format_matrix(const Eigen::MatrixXd& h) {
  std::string out = std::to_string(h.rows()) + " " + std::to_string(h.cols()) + "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", h(i, j));
      if (j > 0) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

AttackDecomposition decompose_attack(const MeasurementMatrix& mm, const Eigen::VectorXd& a) {
  if (a.size() != mm.rows()) throw DimensionError("attack length does not match M");
  return {mm.least_squares(a), mm.complement().transpose() * a};
}

}  // namespace fdi
