#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"

#include "ndm/csv.hpp"
#include "ndm/error.hpp"
#include "ndm/panel.hpp"

using namespace ndm;

namespace {

NodeRoster roster_of(std::initializer_list<const char*> nodes, Period from = 1950, Period to = 2016) {
  std::vector<RosterEntry> entries;
  for (const char* n : nodes) entries.push_back({n, from, to});
  return NodeRoster(std::move(entries));
}

Panel parse(const std::string& edges, const NodeRoster& roster) {
  std::istringstream in(edges);
  return read_panel(in, roster, "edges.csv");
}

}  // namespace

TEST_CASE("csv field splitting and numbers") {
  CHECK(csv::split_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(csv::split_line(R"("x,y",2,"say ""hi""")") == std::vector<std::string>{"x,y", "2", R"(say "hi")"});
  CHECK(csv::parse_double(" 10.5 ", "v") == 10.5);
  CHECK_THROWS_AS(csv::parse_double("10.5x", "v"), DataError);
  CHECK_THROWS_AS(csv::parse_int("1952.5", "period"), DataError);
  CHECK_FALSE(csv::parse_optional_double("NA", "v").has_value());
  CHECK_FALSE(csv::parse_optional_double("", "v").has_value());
  CHECK(csv::format_double(0.1) == "0.10000000000000001");
  CHECK(csv::format_double(std::numeric_limits<double>::quiet_NaN()) == "NA");
}

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(csv::parse_double(csv::format_double(x), "x") == x);
  }
}

TEST_CASE("single row gives one snapshot") {
  const Panel p = parse("period,sender,receiver,value\n1952,USA,GBR,10.5\n", roster_of({"USA", "GBR"}));
  REQUIRE(p.snapshots.size() == 1);
  CHECK(p.snapshots[0].period() == 1952);
  CHECK(p.snapshots[0].size() == 1);
}

TEST_CASE("duplicate dyad is rejected") {
  const std::string text = "period,sender,receiver,value\n1952,USA,GBR,10.5\n1952,USA,GBR,10.5\n";
  CHECK_THROWS_WITH_AS(parse(text, roster_of({"USA", "GBR"})), doctest::Contains("duplicate dyad (USA,GBR)"),
                       DataError);
}

TEST_CASE("distinct periods become separate snapshots") {
  const Panel p =
      parse("period,sender,receiver,value\n1953,USA,GBR,3.0\n1952,USA,GBR,10.5\n", roster_of({"USA", "GBR"}));
  REQUIRE(p.snapshots.size() == 2);
  CHECK(p.snapshots[0].period() == 1952);
  CHECK(p.snapshots[1].period() == 1953);
  CHECK(p.find(1953) != nullptr);
  CHECK(p.find(1954) == nullptr);
}

TEST_CASE("ingestion validation") {
  const NodeRoster roster = roster_of({"USA", "GBR"});
  SUBCASE("self loop") {
    CHECK_THROWS_AS(parse("period,sender,receiver,value\n1952,USA,USA,1\n", roster), DataError);
  }
  SUBCASE("nonpositive value") {
    CHECK_THROWS_AS(parse("period,sender,receiver,value\n1952,USA,GBR,0\n", roster), DataError);
    CHECK_THROWS_AS(parse("period,sender,receiver,value\n1952,USA,GBR,-2\n", roster), DataError);
  }
  SUBCASE("unknown or inactive node") {
    CHECK_THROWS_AS(parse("period,sender,receiver,value\n1952,USA,FRA,1\n", roster), DataError);
    CHECK_THROWS_AS(parse("period,sender,receiver,value\n1949,USA,GBR,1\n", roster), DataError);
  }
  SUBCASE("missing column") {
    CHECK_THROWS_AS(parse("period,sender,value\n1952,USA,1\n", roster), DataError);
  }
  SUBCASE("error names file and line") {
    CHECK_THROWS_WITH(parse("period,sender,receiver,value\n1952,USA,GBR,1\n1952,USA,GBR,x\n", roster),
                      doctest::Contains("edges.csv:3"));
  }
}

TEST_CASE("roster validation") {
  std::istringstream dup("node,active_from,active_to\nA,1950,2000\nA,1960,2000\n");
  CHECK_THROWS_AS(read_roster(dup), DataError);
  std::istringstream reversed("node,active_from,active_to\nA,2000,1950\n");
  CHECK_THROWS_AS(read_roster(reversed), DataError);
  const NodeRoster r = roster_of({"A"}, 1990, 1991);
  CHECK(r.is_active("A", 1990));
  CHECK_FALSE(r.is_active("A", 1992));
  CHECK_FALSE(r.is_active("B", 1990));
}

TEST_CASE("index_flows sorts lexicographically") {
  const NodeRoster roster = roster_of({"A", "B", "C"});
  NetworkSnapshot s(2000, {{"B", "A", 1.0}, {"A", "B", 2.0}, {"A", "C", 3.0}}, roster);
  const FlowIndex index = index_flows(s);
  const std::vector<Dyad> expected{{"A", "B"}, {"A", "C"}, {"B", "A"}};
  CHECK(index.dyads() == expected);
  CHECK(*index.position({"B", "A"}) == 2);
  CHECK_FALSE(index.position({"C", "A"}).has_value());
  const Eigen::VectorXd y = log_flows(s, index);
  CHECK(y(0) == doctest::Approx(std::log(2.0)));
  CHECK(y(2) == doctest::Approx(0.0));
}

TEST_CASE("index_flows singleton and empty") {
  const NodeRoster roster = roster_of({"A", "B"});
  CHECK(index_flows(NetworkSnapshot(2000, {{"A", "B", 1.0}}, roster)).size() == 1);
  CHECK_THROWS_AS(index_flows(NetworkSnapshot(2000, {}, roster)), DataError);
}

TEST_CASE("index_flows is invariant under permutation") {
  std::vector<RosterEntry> entries;
  for (int k = 0; k < 12; ++k) entries.push_back({"K" + std::to_string(k), 1990, 2010});
  const NodeRoster roster(entries);
  std::vector<Flow> flows;
  for (int a = 0; a < 12; ++a) {
    for (int b = 0; b < 12; ++b) {
      if (a != b && (a * 7 + b * 3) % 4 == 0) flows.push_back({"K" + std::to_string(a), "K" + std::to_string(b), 1.0 + a + b});
    }
  }
  const FlowIndex reference = index_flows(NetworkSnapshot(2000, flows, roster));
  CHECK(reference.size() == flows.size());
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(flows.begin(), flows.end(), rng);
    CHECK(index_flows(NetworkSnapshot(2000, flows, roster)).dyads() == reference.dyads());
  }
}

TEST_CASE("edge file round trip") {
  const NodeRoster roster = roster_of({"A", "B", "C"});
  const Panel p = parse(
      "period,sender,receiver,value\n2001,C,A,0.1\n2000,A,B,10.5\n2000,B,A,1e-3\n2001,A,C,123456.789\n", roster);
  std::ostringstream out;
  write_edges(out, p);
  const Panel q = parse(out.str(), roster);
  REQUIRE(q.snapshots.size() == p.snapshots.size());
  for (std::size_t s = 0; s < p.snapshots.size(); ++s) {
    const FlowIndex a = index_flows(p.snapshots[s]);
    const FlowIndex b = index_flows(q.snapshots[s]);
    CHECK(a.dyads() == b.dyads());
    CHECK(log_flows(p.snapshots[s], a) == log_flows(q.snapshots[s], b));
  }
  std::ostringstream again;
  write_edges(again, q);
  CHECK(again.str() == out.str());

  std::ostringstream roster_text;
  write_roster(roster_text, roster);
  std::istringstream roster_in(roster_text.str());
  CHECK(read_roster(roster_in).entries().size() == 3);
}
