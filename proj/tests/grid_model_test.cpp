#include "fdi/grid_model.hpp"

#include "fdi/errors.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace fdi {
namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(FDI_TEST_DATA_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(ParseCase, SmallestValidCase) {
  const GridCase grid = parse_case(read_fixture("two_bus.case"));
  ASSERT_EQ(grid.buses().size(), 2u);
  ASSERT_EQ(grid.branches().size(), 1u);
  EXPECT_EQ(grid.slack_id(), 1);
  EXPECT_DOUBLE_EQ(grid.branches()[0].reactance, 0.5);
}

TEST(ParseCase, NegativeReactanceRejected) {
  try {
    parse_case(read_fixture("two_bus_negative.case"));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("nonpositive reactance"), std::string::npos);
  }
}

TEST(ParseCase, TriangleFixture) {
  const GridCase grid = parse_case(read_fixture("three_bus.case"));
  ASSERT_EQ(grid.buses().size(), 3u);
  ASSERT_EQ(grid.branches().size(), 3u);
  EXPECT_TRUE(grid.buses()[0].is_slack);
  EXPECT_FALSE(grid.buses()[1].is_slack);
  EXPECT_EQ(grid.branches()[1].from, 2);
  EXPECT_EQ(grid.branches()[1].to, 3);
  EXPECT_DOUBLE_EQ(grid.branches()[2].reactance, 1.0);
}

TEST(ParseCase, ReportsLineAndColumn) {
  try {
    parse_case("bus 1 slack\nbus x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 5u);
  }
  try {
    parse_case("bus 1 slack\n  node 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 3u);
  }
  EXPECT_THROW(parse_case("branch 1 2\n"), ParseError);
  EXPECT_THROW(parse_case("bus 1 slack extra\n"), ParseError);
  EXPECT_THROW(parse_case("bus 1 master\n"), ParseError);
  EXPECT_THROW(parse_case("bus 1 slack\nbus 2\nbranch 1 2 abc\n"), ParseError);
}

TEST(ParseCase, ValidationErrors) {
  EXPECT_THROW(parse_case("bus 1\nbus 2\nbranch 1 2 1\n"), ValidationError);                  // no slack
  EXPECT_THROW(parse_case("bus 1 slack\nbus 1\nbranch 1 1 1\n"), ValidationError);            // duplicate bus
  EXPECT_THROW(parse_case("bus 1 slack\nbus 2\nbus 3\nbranch 1 2 1\n"), ValidationError);     // disconnected
  EXPECT_THROW(parse_case("bus 1 slack\nbus 2\nbranch 1 3 1\n"), ValidationError);            // unknown bus
  EXPECT_THROW(parse_case("bus 1 slack\nbus 2 slack\nbranch 1 2 1\n"), ValidationError);      // two slacks
  EXPECT_THROW(parse_case("bus 1 slack\nbus 2\nbranch 1 2 0\n"), ValidationError);            // zero reactance
}

TEST(DcJacobian, TwoBusHandDerivation) {
  const GridCase grid = parse_case("bus 1 slack\nbus 2\nbranch 1 2 1\n");
  MeterPlan plan{{FlowMeter{0, true}, InjectionMeter{1}, InjectionMeter{2}}};
  const MeasurementMatrix mm = build_dc_jacobian(grid, plan);
  ASSERT_EQ(mm.rows(), 3);
  ASSERT_EQ(mm.cols(), 1);
  EXPECT_DOUBLE_EQ(mm.jacobian()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(mm.jacobian()(1, 0), -1.0);
  EXPECT_DOUBLE_EQ(mm.jacobian()(2, 0), 1.0);
}

TEST(DcJacobian, SingleFlowMeterIsUnderdetermined) {
  const GridCase grid = parse_case("bus 1 slack\nbus 2\nbranch 1 2 1\n");
  try {
    build_dc_jacobian(grid, MeterPlan{{FlowMeter{0, true}}});
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("M <= K is violated"), std::string::npos);
  }
}

TEST(DcJacobian, TriangleAllMeters) {
  const GridCase grid = parse_case(read_fixture("three_bus.case"));
  const MeasurementMatrix mm = build_dc_jacobian(grid, MeterPlan::all_meters(grid));
  ASSERT_EQ(mm.rows(), 9);
  ASSERT_EQ(mm.cols(), 2);
  EXPECT_EQ(testing::rank_by_row_reduction(mm.jacobian()), 2);

  // Flow 2->3 (second branch, forward) reads theta_2 - theta_3.
  EXPECT_DOUBLE_EQ(mm.jacobian()(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(mm.jacobian()(2, 1), -1.0);
}

TEST(DcJacobian, FlowRowsConserveWithSlackColumn) {
  const GridCase grid = parse_case("bus 1 slack\nbus 2\nbus 3\nbus 4\n"
                                   "branch 1 2 0.2\nbranch 2 3 0.4\nbranch 3 4 0.5\nbranch 4 1 0.25\nbranch 2 4 1.5\n");
  const MeterPlan plan = MeterPlan::all_meters(grid);
  const MeasurementMatrix mm = build_dc_jacobian(grid, plan);
  for (Eigen::Index r = 0; r < mm.rows(); ++r) {
    const auto& entry = plan.entries[static_cast<std::size_t>(r)];
    const auto* flow = std::get_if<FlowMeter>(&entry);
    if (flow == nullptr) continue;
    const Branch& br = grid.branches()[flow->branch];
    // The slack column would hold the missing +-1/x whenever the branch touches the slack bus.
    double slack_entry = 0.0;
    const double y = (flow->forward ? 1.0 : -1.0) / br.reactance;
    if (br.from == grid.slack_id()) slack_entry = y;
    if (br.to == grid.slack_id()) slack_entry = -y;
    EXPECT_NEAR(mm.jacobian().row(r).sum() + slack_entry, 0.0, 1e-12) << "row " << r;
  }
}

TEST(DcJacobian, UncoveredStateIsRankDeficient) {
  const GridCase grid = parse_case("bus 1 slack\nbus 2\nbus 3\nbranch 1 2 1\nbranch 2 3 1\n");
  // Only the 1-2 branch is metered, so theta_3 is invisible.
  MeterPlan plan{{FlowMeter{0, true}, FlowMeter{0, false}, InjectionMeter{1}}};
  EXPECT_THROW(build_dc_jacobian(grid, plan), RankError);
}

TEST(LoadMatrix, CanonicalComplement) {
  const MeasurementMatrix mm = load_matrix("2 1\n1\n0\n");
  EXPECT_EQ(mm.jacobian(), (Eigen::MatrixXd(2, 1) << 1, 0).finished());
  ASSERT_EQ(mm.complement().rows(), 2);
  ASSERT_EQ(mm.complement().cols(), 1);
  EXPECT_NEAR(mm.complement()(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(mm.complement()(1, 0)), 1.0, 1e-15);
}

TEST(LoadMatrix, FullScaleSyntheticMatrix) {
  const Eigen::MatrixXd h = testing::random_matrix(284, 60, 11);
  const MeasurementMatrix mm = load_matrix(format_matrix(h));
  EXPECT_EQ(mm.rows(), 284);
  EXPECT_EQ(mm.cols(), 60);
  EXPECT_EQ(mm.jacobian(), h);  // 17 significant digits round-trip exactly
  EXPECT_LE(testing::max_abs(mm.complement().transpose() * mm.jacobian()), 1e-10);
  EXPECT_LE(testing::max_abs(mm.complement().transpose() * mm.complement() -
                             Eigen::MatrixXd::Identity(224, 224)), 1e-10);
}

TEST(LoadMatrix, CopiedColumnIsRankDeficient) {
  Eigen::MatrixXd h = testing::random_matrix(80, 60, 5);
  h.col(59) = h.col(3);
  ASSERT_EQ(testing::rank_by_row_reduction(h), 59);
  EXPECT_THROW(load_matrix(format_matrix(h)), RankError);
}

TEST(LoadMatrix, DimensionMismatch) {
  EXPECT_THROW(load_matrix("3 1\n1\n0\n"), DimensionError);       // short body
  EXPECT_THROW(load_matrix("2 1\n1\n0\n5\n"), DimensionError);    // long body
  EXPECT_THROW(load_matrix("2 2\n1 0\n0\n"), DimensionError);     // short row
  EXPECT_THROW(load_matrix("2 2\n1 0\n0 1\n"), DimensionError);   // M = K
  EXPECT_THROW(load_matrix("2 1\n1\nzero\n"), ParseError);
  EXPECT_THROW(load_matrix(""), ParseError);
}

TEST(OrthogonalComplement, PaddedIdentity) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 2);
  h(0, 0) = 1;
  h(1, 1) = 1;
  const Eigen::MatrixXd b = orthogonal_complement(h);
  ASSERT_EQ(b.cols(), 1);
  EXPECT_NEAR(b(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(b(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b(2, 0)), 1.0, 1e-15);
}

TEST(OrthogonalComplement, RandomInstancesSatisfyInvariants) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(seed % 6);
    const Eigen::Index m = k + 1 + static_cast<Eigen::Index>(seed % 9);
    const Eigen::MatrixXd h = testing::random_matrix(m, k, seed);
    const Eigen::MatrixXd b = orthogonal_complement(h);
    ASSERT_EQ(b.rows(), m);
    ASSERT_EQ(b.cols(), m - k);
    EXPECT_LE(testing::max_abs(b.transpose() * h), 1e-10);
    EXPECT_LE(testing::max_abs(b.transpose() * b - Eigen::MatrixXd::Identity(m - k, m - k)), 1e-10);
    // [H B] spans R^M.
    Eigen::MatrixXd both(m, m);
    both << h, b;
    EXPECT_EQ(testing::rank_by_row_reduction(both), m);
  }
}

TEST(OrthogonalComplement, RankDeficientInputRejected) {
  Eigen::MatrixXd h = testing::random_matrix(10, 4, 3);
  h.col(2) = 2.0 * h.col(0) - h.col(1);
  EXPECT_THROW(orthogonal_complement(h), RankError);
}

TEST(DecomposeAttack, HandExample) {
  const MeasurementMatrix mm = load_matrix("2 1\n1\n0\n");
  const auto d = decompose_attack(mm, Eigen::Vector2d(2, 3));
  ASSERT_EQ(d.theta_a.size(), 1);
  ASSERT_EQ(d.theta_b.size(), 1);
  EXPECT_NEAR(d.theta_a(0), 2.0, 1e-14);
  EXPECT_NEAR(std::abs(d.theta_b(0)), 3.0, 1e-14);
  EXPECT_FALSE(d.unobservable(1e-9));
}

TEST(DecomposeAttack, ColumnSpaceAttackHasNoObservablePart) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MeasurementMatrix mm(testing::random_matrix(10, 4, seed));
    const Eigen::VectorXd theta_a = 5.0 * testing::random_matrix(4, 1, seed + 100);
    const Eigen::VectorXd a = mm.jacobian() * theta_a;
    const auto d = decompose_attack(mm, a);
    EXPECT_LE(d.theta_b.lpNorm<Eigen::Infinity>(), 1e-9 * (1.0 + a.norm()));
    EXPECT_TRUE(d.unobservable(1e-9 * (1.0 + a.norm())));
    EXPECT_LE((d.theta_a - theta_a).lpNorm<Eigen::Infinity>(), 1e-9 * (1.0 + theta_a.norm()));
  }
}

TEST(DecomposeAttack, ReassemblyIsIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MeasurementMatrix mm(testing::random_matrix(10, 4, seed));
    const Eigen::VectorXd a = testing::random_matrix(10, 1, seed + 500);
    const auto d = decompose_attack(mm, a);
    const Eigen::VectorXd back = mm.jacobian() * d.theta_a + mm.complement() * d.theta_b;
    EXPECT_LE((a - back).norm(), 1e-9 * (1.0 + a.norm()));
  }
  const MeasurementMatrix mm(testing::random_matrix(10, 4, 1));
  EXPECT_THROW(decompose_attack(mm, Eigen::VectorXd::Zero(9)), DimensionError);
}

}  // namespace
}  // namespace fdi
