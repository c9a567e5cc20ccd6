#include "knnim/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace knnim;
using namespace knnim::io;

TEST(Units, ParsesStringIdsInFileOrder) {
  std::istringstream in("id,treatment,response\r\nalice,1,2.5\n\nbob, 0 ,-1e-3\n\"c,d\",1,0\n");
  const auto t = read_units(in);
  EXPECT_EQ(t.ids, (std::vector<std::string>{"alice", "bob", "c,d"}));
  EXPECT_EQ(t.assignment.bits(), (std::vector<std::uint8_t>{1, 0, 1}));
  EXPECT_DOUBLE_EQ(t.responses(1), -1e-3);
}

TEST(Units, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return read_units(in);
  };
  EXPECT_THROW(parse(""), InputError);
  EXPECT_THROW(parse("id,w,y\n1,0,1\n"), InputError);
  EXPECT_THROW(parse("id,treatment,response\n"), InputError);
  EXPECT_THROW(parse("id,treatment,response\n1,2,1\n"), InputError);
  EXPECT_THROW(parse("id,treatment,response\n1,1,abc\n"), InputError);
  EXPECT_THROW(parse("id,treatment,response\n1,1,3x\n"), InputError);
  EXPECT_THROW(parse("id,treatment,response\n1,1,nan\n"), InputError);
  EXPECT_THROW(parse("id,treatment,response\n1,1,1\n1,0,1\n"), InputError);
  EXPECT_THROW(parse("id,treatment,response\n1,1\n"), InputError);
}

TEST(Distances, LongFormWithMissingPairs) {
  std::istringstream in("src,dst,distance\n1,2,0.5\n2,1,0.25\n3,1,2\n");
  const auto d = read_distances(in, {"1", "2", "3"});
  EXPECT_EQ(d(0, 1), 0.5);
  EXPECT_EQ(d(1, 0), 0.25);
  EXPECT_EQ(d(2, 0), 2.0);
  EXPECT_TRUE(std::isinf(d(0, 2)));
  EXPECT_EQ(d(1, 1), 0.0);
}

TEST(Distances, RankedEdges) {
  std::istringstream in("src,dst,rank\na,b,1\na,c,2\nb,c,1\nc,a,1\n");
  const auto nbr = build_k_neighborhoods(read_distances(in, {"a", "b", "c"}), 1);
  EXPECT_EQ(nbr.neighbors(0)[0], 1);
  EXPECT_EQ(nbr.neighbors(1)[0], 2);
  EXPECT_EQ(nbr.neighbors(2)[0], 0);
}

TEST(Distances, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return read_distances(in, {"1", "2"});
  };
  EXPECT_THROW(parse("a,b,c\n"), InputError);
  EXPECT_THROW(parse("src,dst,distance\n1,3,1\n"), InputError);
  EXPECT_THROW(parse("src,dst,distance\n1,2,-1\n"), InputError);
  EXPECT_THROW(parse("src,dst,distance\n1,2,1\n1,2,2\n"), InputError);
  EXPECT_THROW(parse(""), InputError);
}

TEST(Format, FixedFour) {
  EXPECT_EQ(fixed4(0.18994), "0.1899");
  EXPECT_EQ(fixed4(-0.02536), "-0.0254");
  EXPECT_EQ(fixed4(-0.00001), "0.0000");
  EXPECT_EQ(fixed4(3.0), "3.0000");
}

namespace {

AnalysisReport sample_report() {
  AnalysisReport r;
  r.k = 2;
  r.design = "crd(N=12, N_t=6)";
  r.z = 1.96;
  r.rows = {{"total", "A1", 0.1 + 0.2, 1.0 / 3.0, -0.35, 0.95}, {"nn2", "A2", -2e-17, 0.0, 0.0, 0.0}};
  r.counts.k = 2;
  r.counts.cells.resize(2, 4);
  r.counts.cells << 1, 2, 3, 0, 4, 0, 1, 1;
  r.warnings = {"exposure (1,(1,1)) observed on 1 units (< 30)"};
  return r;
}

}  // namespace

TEST(Report, JsonRoundTripIsExact) {
  const auto r = sample_report();
  std::stringstream s;
  write_report_json(s, r);
  const auto back = read_report_json(s);
  EXPECT_EQ(back.k, r.k);
  EXPECT_EQ(back.design, r.design);
  EXPECT_EQ(back.z, r.z);
  EXPECT_EQ(back.rows, r.rows);
  EXPECT_EQ(back.counts.cells, r.counts.cells);
  EXPECT_EQ(back.warnings, r.warnings);
}

TEST(Report, CsvRoundTripAtFourDecimals) {
  const auto r = sample_report();
  std::stringstream s;
  write_estimates_csv(s, r.rows);
  const auto back = read_estimates_csv(s);
  ASSERT_EQ(back.size(), r.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].estimator, r.rows[i].estimator);
    EXPECT_NEAR(back[i].estimate, r.rows[i].estimate, 5e-5);
    EXPECT_NEAR(back[i].se, r.rows[i].se, 5e-5);
  }
  std::stringstream again;
  write_estimates_csv(again, back);
  std::stringstream first;
  write_estimates_csv(first, r.rows);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Report, MalformedJson) {
  std::istringstream in("{\"k\": 2}");
  EXPECT_THROW(read_report_json(in), InputError);
}

TEST(Report, CountsGridShape) {
  std::ostringstream s;
  write_counts_csv(s, sample_report().counts);
  EXPECT_EQ(s.str(),
            "treatment,\"(0,0)\",\"(0,1)\",\"(1,0)\",\"(1,1)\"\n"
            "treated,4,1,0,1\n"
            "control,1,3,2,0\n");
}
