#include "fdi/csv.hpp"

#include "fdi/errors.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace fdi {

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_scores_csv(std::ostream& out, const ScoreTable& table) {
  out << "trial,detector,hypothesis,statistic\n";
  for (const auto& row : table.rows) {
    out << row.trial << ',' << to_string(row.detector) << ',' << to_string(row.hypothesis) << ','
        << format_double(row.statistic) << '\n';
  }
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

ScoreTable read_scores_csv(std::string_view text) {
  ScoreTable table;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    if (!header_seen) {
      if (line != "trial,detector,hypothesis,statistic") {
        throw ParseError(line_no, 1, "expected header 'trial,detector,hypothesis,statistic'");
      }
      header_seen = true;
      continue;
    }

    const auto fields = split(line, ',');
    if (fields.size() != 4) throw ParseError(line_no, 0, "expected 4 fields, got " + std::to_string(fields.size()));
    ScoreRow row{};
    {
      const auto f = fields[0];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row.trial);
      if (ec != std::errc{} || ptr != f.data() + f.size() || row.trial < 0) {
        throw ParseError(line_no, 1, "bad trial index '" + std::string(f) + "'");
      }
    }
    const auto detector = parse_detector(fields[1]);
    if (!detector) throw ParseError(line_no, 0, "unknown detector '" + std::string(fields[1]) + "'");
    row.detector = *detector;
    const auto hypothesis = parse_hypothesis(fields[2]);
    if (!hypothesis) throw ParseError(line_no, 0, "hypothesis must be H0 or H1, got '" + std::string(fields[2]) + "'");
    row.hypothesis = *hypothesis;
    {
      const auto f = fields[3];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row.statistic);
      if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(row.statistic)) {
        throw ParseError(line_no, 0, "bad statistic '" + std::string(f) + "'");
      }
    }
    table.rows.push_back(row);
  }
  if (!header_seen) throw ParseError(1, 1, "empty scores file");
  return table;
}

void write_roc_csv(std::ostream& out, const std::vector<RocCurve>& curves) {
  out << "detector,threshold,pfa,pd\n";
  for (const auto& curve : curves) {
    for (const auto& p : curve.points) {
      out << to_string(curve.detector) << ',' << format_double(p.threshold) << ',' << format_double(p.pfa) << ','
          << format_double(p.pd) << '\n';
    }
  }
}

}  // namespace fdi
