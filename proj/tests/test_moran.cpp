#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "ndm/error.hpp"
#include "ndm/moran.hpp"

using namespace ndm;

TEST_CASE("two-point Moran") {
  Eigen::MatrixXd w(2, 2);
  w << 0, 1, 1, 0;
  CHECK(morans_i(Eigen::Vector2d(1, -1), w) == -1.0);
  CHECK_THROWS_AS(morans_i(Eigen::Vector2d(1, 1), w), NumericError);
  CHECK_THROWS_AS(morans_i(Eigen::Vector2d(1, -1), Eigen::MatrixXd::Zero(2, 2)), NumericError);
}

TEST_CASE("scale invariance and block assembly") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    BlockDiagonalWeights b;
    std::vector<Eigen::MatrixXd> blocks;
    for (int k = 0; k < 3; ++k) {
      blocks.push_back(oracle::random_row_normalized(rng, 4 + k, 0.5));
      b.add_block(blocks.back());
    }
    Eigen::VectorXd v(b.size());
    for (Eigen::Index a = 0; a < v.size(); ++a) v(a) = z(rng);
    const double i = morans_i(v, b);
    CHECK(i == doctest::Approx(morans_i(v, b.dense())).epsilon(1e-12));
    CHECK(i == doctest::Approx(morans_i(3.7 * v, b)).epsilon(1e-12));
    // Pooled statistic from per-block quadratic forms.
    const Eigen::VectorXd c = v.array() - v.mean();
    double quad = 0.0;
    double s0 = 0.0;
    Eigen::Index off = 0;
    for (const auto& m : blocks) {
      quad += c.segment(off, m.rows()).dot(m * c.segment(off, m.rows()));
      s0 += m.sum();
      off += m.rows();
    }
    CHECK(i == doctest::Approx(static_cast<double>(v.size()) / s0 * quad / c.squaredNorm()).epsilon(1e-12));
    CHECK(b.total_weight() == doctest::Approx(s0));
  }
}

TEST_CASE("permutation null mean") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> z;
  const int m = 12;
  const Eigen::MatrixXd w = oracle::random_row_normalized(rng, m, 0.4);
  Eigen::VectorXd v(m);
  for (int a = 0; a < m; ++a) v(a) = z(rng);
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double sum = 0.0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::VectorXd p(m);
    for (int a = 0; a < m; ++a) p(a) = v(perm[a]);
    sum += morans_i(p, w);
  }
  CHECK(std::abs(sum / reps + 1.0 / (m - 1)) < 0.01);
}

TEST_CASE("cutoff grid") {
  const auto g = CutoffGrid{}.values();
  CHECK(g.size() == 201);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 20000.0);
  CHECK(g[11] == 1100.0);
  CHECK(parse_scan_direction("export") == ScanDirection::Export);
  CHECK_THROWS_AS(parse_scan_direction("both"), ConfigError);
}

TEST_CASE("scan on a hand-built panel") {
  // Receivers B and C are 500 km apart, D is far from both.
  DyadicSeries d("distance", true);
  d.set("A", "B", 2000, 5000);
  d.set("A", "C", 2000, 5000);
  d.set("A", "D", 2000, 5000);
  d.set("B", "C", 2000, 500);
  d.set("B", "D", 2000, 9000);
  d.set("C", "D", 2000, 9000);
  const FlowIndex index = oracle::make_index({{"A", "B"}, {"A", "C"}, {"A", "D"}}, 2000);
  std::vector<PeriodResiduals> res{{index, Eigen::Vector3d(1.0, 1.2, -2.2)}};
  const CutoffScan single = scan_cutoffs(res, d, ScanDirection::Import, {600.0});
  CHECK(single.best_cutoff == 600.0);
  CHECK(single.defined[0]);

  const CutoffScan scan = scan_cutoffs(res, d, ScanDirection::Import, CutoffGrid{}.values());
  CHECK_FALSE(scan.defined[0]);
  CHECK_FALSE(scan.defined[5]);  // 500 is not < 500
  CHECK(scan.defined[6]);
  CHECK(scan.best_cutoff == 600.0);
  // From 9100 km on every receiver neighbors every other one.
  CHECK(scan.moran_values.back() == doctest::Approx(-0.5));
  // Export direction: a single sender, no neighbors at any cutoff.
  CHECK_THROWS_AS(scan_cutoffs(res, d, ScanDirection::Export, {100.0, 20000.0}), NumericError);
}

TEST_CASE("grid refinement never lowers the maximum") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> km(0.0, 2000.0);
  std::normal_distribution<double> z;
  DyadicSeries d("distance", true);
  for (int a = 0; a < 8; ++a) {
    for (int b = a + 1; b < 8; ++b) d.set("K" + std::to_string(a), "K" + std::to_string(b), 2000, km(rng));
  }
  const FlowIndex index = oracle::random_index(rng, 8, 30);
  Eigen::VectorXd v(index.size());
  for (Eigen::Index a = 0; a < v.size(); ++a) v(a) = z(rng);
  std::vector<PeriodResiduals> res{{index, v}};
  const CutoffScan coarse = scan_cutoffs(res, d, ScanDirection::Import, CutoffGrid{0, 2000, 200}.values());
  const CutoffScan fine = scan_cutoffs(res, d, ScanDirection::Import, CutoffGrid{0, 2000, 100}.values());
  CHECK(fine.best_value >= coarse.best_value);
}

TEST_CASE("scan equals Moran's I of the assembled block-diagonal matrix") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> km(0.0, 3000.0);
  std::normal_distribution<double> z;
  DyadicSeries d("distance", true);
  for (int a = 0; a < 9; ++a) {
    for (int b = a + 1; b < 9; ++b) d.set("K" + std::to_string(a), "K" + std::to_string(b), 1990, km(rng));
  }
  std::vector<PeriodResiduals> res;
  for (int t = 0; t < 3; ++t) {
    const FlowIndex index = oracle::random_index(rng, 9, 12 + 5 * t, 2000 + t);
    Eigen::VectorXd v(index.size());
    for (Eigen::Index a = 0; a < v.size(); ++a) v(a) = z(rng);
    res.push_back({index, v});
  }
  Eigen::Index total = 0;
  for (const auto& r : res) total += r.values.size();
  Eigen::VectorXd pooled(total);
  Eigen::Index off = 0;
  for (const auto& r : res) {
    pooled.segment(off, r.values.size()) = r.values;
    off += r.values.size();
  }
  const std::vector<double> grid = CutoffGrid{0, 3000, 100}.values();
  for (auto direction : {ScanDirection::Import, ScanDirection::Export}) {
    const CutoffScan scan = scan_cutoffs(res, d, direction, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto kind = direction == ScanDirection::Import ? NeighborhoodKind::DistanceImport
                                                           : NeighborhoodKind::DistanceExport;
      if (grid[k] == 0.0) {
        CHECK_FALSE(scan.defined[k]);
        continue;
      }
      BlockDiagonalWeights w;
      for (const auto& r : res) {
        w.add_block(build_weight_matrix(NeighborhoodSpec(kind, grid[k]), r.index, {nullptr, &d}).entries);
      }
      REQUIRE(scan.defined[k] == (w.total_weight() > 0.0));
      if (scan.defined[k]) CHECK(std::abs(scan.moran_values[k] - morans_i(pooled, w)) < 1e-12);
    }
  }
}
