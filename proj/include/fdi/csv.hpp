#pragma once

#include "fdi/experiment.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fdi {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Header `trial,detector,hypothesis,statistic`.
void write_scores_csv(std::ostream& out, const ScoreTable& table);

/// Throws ParseError on malformed input.
ScoreTable read_scores_csv(std::string_view text);

/// Header `detector,threshold,pfa,pd`; one block per curve, in the given order.
void write_roc_csv(std::ostream& out, const std::vector<RocCurve>& curves);

}  // namespace fdi
