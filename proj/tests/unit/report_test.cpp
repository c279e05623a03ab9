#include <gtest/gtest.h>

#include "hypereyes/report.hpp"

namespace hypereyes {
namespace {

TEST(Fixed, NoNegativeZero) {
  EXPECT_EQ(fixed(-0.0001, 3), "0.000");
  EXPECT_EQ(fixed(0.5196, 3), "0.520");
  EXPECT_EQ(fixed(-1.25, 1), "-1.2");
}

TEST(Table, CsvQuotesOnlyWhenNeeded) {
  const Table t{{"a", "b"}, {{"x,y", "say \"hi\""}, {"1", "2"}}};
  EXPECT_EQ(t.to_csv(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n1,2\n");
}

TEST(Table, PlainAlignment) {
  const Table t{{"method", "cas"}, {{"a", "0.520"}, {"longer", "12.000"}}};
  EXPECT_EQ(t.to_plain(), "method     cas\n--------------\na        0.520\nlonger  12.000\n");
}

TEST(CasTable, ReproducesPublishedValue) {
  const auto t = cas_table({{"MMSearch-R1", 0.191, 2.6, 1.71}});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].back(), "0.520");
}

TEST(RobustnessTable, OneRowPerK) {
  const auto t = robustness_table({{1, 1.0}, {3, 0.4}});
  EXPECT_EQ(t.rows, (std::vector<std::vector<std::string>>{{"1", "1.0000"}, {"3", "0.4000"}}));
}

}  // namespace
}  // namespace hypereyes
