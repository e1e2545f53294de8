#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"

#include "ndm/covariates.hpp"
#include "ndm/error.hpp"

using namespace ndm;

namespace {

NodalSeries series_of(const std::string& name, std::initializer_list<std::tuple<const char*, Period, std::optional<double>>> v) {
  NodalSeries s(name);
  for (const auto& [node, t, x] : v) s.set(node, t, x);
  return s;
}

CovariateSources paper_like_sources(int period) {
  CovariateSources src;
  src.nodal.push_back(series_of("gdp", {{"A", period, std::exp(2.0)}, {"B", period, std::exp(3.0)}}));
  src.nodal.push_back(series_of("milex", {{"A", period, 1.0}, {"B", period, std::exp(1.0)}}));
  src.nodal.push_back(series_of("polity", {{"A", period, 10.0}, {"B", period, -10.0}}));
  DyadicSeries alliance("alliance", true);
  alliance.set("A", "B", period, 1.0);
  src.dyadic.push_back(alliance);
  return src;
}

}  // namespace

TEST_CASE("linear imputation") {
  SUBCASE("interior gap") {
    const auto s = impute_linear(series_of("g", {{"A", 1, 2.0}, {"A", 2, std::nullopt}, {"A", 3, 4.0}}));
    CHECK(*s.at("A", 2) == doctest::Approx(3.0));
  }
  SUBCASE("leading gap takes the nearest value") {
    const auto s = impute_linear(series_of("g", {{"A", 1, std::nullopt}, {"A", 2, 5.0}}));
    CHECK(*s.at("A", 1) == 5.0);
  }
  SUBCASE("complete series is unchanged") {
    const auto s = series_of("g", {{"A", 1, 1.0}, {"A", 2, 7.0}, {"B", 1, -3.0}});
    CHECK(impute_linear(s).values() == s.values());
  }
  SUBCASE("unlisted years inside the range are filled") {
    const auto s = impute_linear(series_of("g", {{"A", 2000, 0.0}, {"A", 2004, 8.0}}));
    CHECK(*s.at("A", 2001) == doctest::Approx(2.0));
    CHECK(*s.at("A", 2003) == doctest::Approx(6.0));
  }
  SUBCASE("node without observations") {
    CHECK_THROWS_AS(impute_linear(series_of("g", {{"A", 1, std::nullopt}})), DataError);
  }
  SUBCASE("idempotent") {
    const auto once = impute_linear(
        series_of("g", {{"A", 1, std::nullopt}, {"A", 2, 1.0}, {"A", 5, 4.0}, {"A", 9, std::nullopt}, {"B", 3, 2.0}}));
    CHECK(impute_linear(once).values() == once.values());
  }
}

TEST_CASE("default recipe row") {
  const FlowIndex index = oracle::make_index({{"A", "B"}}, 2002);
  const DesignMatrix d = build_design(index, paper_like_sources(2000), CovariateRecipe::arms_trade_default(), 2);
  REQUIRE(d.p() == 6);
  const Eigen::RowVectorXd row = d.rows.row(0);
  const std::vector<double> expected{1, 2, 3, 1, 1, 20};
  for (int c = 0; c < 6; ++c) CHECK(row(c) == doctest::Approx(expected[c]).epsilon(1e-14));
  CHECK(d.column_names.front() == "intercept");
  CHECK(d.warnings.empty());
}

TEST_CASE("lag zero reads the current period") {
  CovariateSources src;
  src.nodal.push_back(series_of("x", {{"A", 2000, 1.5}, {"B", 2000, 2.5}, {"A", 1998, 9.0}, {"B", 1998, 9.0}}));
  CovariateRecipe r;
  r.terms = {{"x_s", "x", TermRole::Sender}, {"x_r", "x", TermRole::Receiver}};
  const FlowIndex index = oracle::make_index({{"A", "B"}, {"B", "A"}}, 2000);
  const DesignMatrix d = build_design(index, src, r, 0);
  CHECK(d.rows(0, 1) == 1.5);
  CHECK(d.rows(0, 2) == 2.5);
  CHECK(d.rows(1, 1) == 2.5);
  const DesignMatrix lagged = build_design(index, src, r, 2);
  CHECK(lagged.rows(0, 1) == 9.0);
}

TEST_CASE("alliance values are carried forward") {
  CovariateSources src = paper_like_sources(2000);
  src.dyadic[0] = DyadicSeries("alliance", true);
  src.dyadic[0].set("B", "A", 1990, 1.0);
  // Nodal series also end in 2000; those extrapolate with a warning.
  const FlowIndex index = oracle::make_index({{"A", "B"}}, 2010);
  const DesignMatrix d = build_design(index, src, CovariateRecipe::arms_trade_default(), 2);
  CHECK(d.rows(0, 4) == 1.0);
  CHECK_FALSE(d.warnings.empty());
}

TEST_CASE("symmetric dyadic series read identically in both directions") {
  DyadicSeries s("dist", true);
  s.set("A", "B", 2000, 42.0);
  CHECK(*s.lookup("B", "A", 2000) == 42.0);
  CHECK(*s.lookup("A", "B", 2005) == 42.0);
  CHECK(*s.lookup("A", "B", 1995) == 42.0);
  CHECK_FALSE(s.lookup("A", "C", 2000).has_value());
  CHECK_THROWS_AS(s.set("B", "A", 2000, 43.0), DataError);

  DyadicSeries directed("trade", false);
  directed.set("A", "B", 2000, 1.0);
  CHECK_FALSE(directed.lookup("B", "A", 2000).has_value());
  CHECK_THROWS_AS(directed.set("A", "B", 2000, 1.0), DataError);
}

TEST_CASE("design errors") {
  SUBCASE("log of nonpositive value names node and period") {
    CovariateSources src = paper_like_sources(2000);
    src.nodal[0].set("B", 2000, 0.0);
    const FlowIndex index = oracle::make_index({{"A", "B"}}, 2002);
    CHECK_THROWS_WITH_AS(build_design(index, src, CovariateRecipe::arms_trade_default(), 2),
                         doctest::Contains("B"), DataError);
  }
  SUBCASE("missing dyadic pair") {
    CovariateSources src = paper_like_sources(2000);
    src.nodal[0].set("C", 2000, 1.0);
    src.nodal[1].set("C", 2000, 1.0);
    src.nodal[2].set("C", 2000, 1.0);
    const FlowIndex index = oracle::make_index({{"A", "C"}}, 2002);
    CHECK_THROWS_WITH_AS(build_design(index, src, CovariateRecipe::arms_trade_default(), 2),
                         doctest::Contains("(A,C)"), DataError);
  }
  SUBCASE("gap inside the observed range") {
    CovariateSources src;
    src.nodal.push_back(series_of("x", {{"A", 1999, 1.0}, {"A", 2000, std::nullopt}, {"A", 2001, 1.0}, {"B", 2000, 1.0}}));
    CovariateRecipe r;
    r.terms = {{"x_s", "x", TermRole::Sender}};
    CHECK_THROWS_AS(build_design(oracle::make_index({{"A", "B"}}, 2000), src, r, 0), DataError);
  }
  SUBCASE("unknown series") {
    CovariateRecipe r;
    r.terms = {{"z", "nope", TermRole::Sender}};
    CHECK_THROWS_AS(build_design(oracle::make_index({{"A", "B"}}, 2000), CovariateSources{}, r, 0), ConfigError);
  }
}

TEST_CASE("design rows follow the flow index") {
  CovariateSources src;
  src.nodal.push_back(series_of("x", {{"A", 2000, 1.0}, {"B", 2000, 2.0}, {"C", 2000, 3.0}}));
  CovariateRecipe r;
  r.intercept = false;
  r.terms = {{"s", "x", TermRole::Sender}, {"r", "x", TermRole::Receiver}, {"d", "x", TermRole::AbsDifference}};
  const FlowIndex index = oracle::make_index({{"C", "A"}, {"A", "B"}, {"B", "C"}}, 2000);
  const DesignMatrix d = build_design(index, src, r, 0);
  for (std::size_t a = 0; a < index.size(); ++a) {
    const double s = *src.nodal[0].at(index[a].sender, 2000);
    const double q = *src.nodal[0].at(index[a].receiver, 2000);
    CHECK(d.rows(a, 0) == s);
    CHECK(d.rows(a, 1) == q);
    CHECK(d.rows(a, 2) == std::abs(s - q));
  }
}

TEST_CASE("term parsing") {
  const CovariateTerm t = parse_term("lg:gdp:receiver:log");
  CHECK(t.name == "lg");
  CHECK(t.series == "gdp");
  CHECK(t.role == TermRole::Receiver);
  CHECK(t.transform == Transform::Log);
  CHECK(parse_term("d:polity:absdiff").transform == Transform::Identity);
  CHECK_THROWS_AS(parse_term("bad:gdp:sideways"), ConfigError);
  CHECK_THROWS_AS(parse_term("nocolons"), ConfigError);
}

TEST_CASE("series file round trip") {
  std::istringstream in("node,period,value\nA,2000,1.5\nA,2001,NA\nB,2000,-3\n");
  const NodalSeries s = read_nodal_series(in, "x", "x.csv");
  CHECK(*s.at("A", 2000) == 1.5);
  CHECK_FALSE(s.at("A", 2001).has_value());
  std::ostringstream out;
  write_nodal_series(out, s);
  std::istringstream back(out.str());
  CHECK(read_nodal_series(back, "x", "x.csv").values() == s.values());

  std::istringstream dup("node,period,value\nA,2000,1\nA,2000,2\n");
  CHECK_THROWS_WITH_AS(read_nodal_series(dup, "x", "x.csv"), doctest::Contains("x.csv:3"), DataError);

  std::istringstream dy("node_a,node_b,period,value\nA,B,2000,1\nB,A,2000,1\n");
  const DyadicSeries d = read_dyadic_series(dy, "ally", true, "ally.csv");
  CHECK(d.pair_count() == 1);
}
