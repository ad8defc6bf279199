#include <gtest/gtest.h>

#include <random>

#include "kdann/bench_stats.hpp"
#include "kdann/errors.hpp"
#include "kdann/kdtree.hpp"
#include "kdann/search.hpp"
#include "test_util.hpp"

using namespace kdann;
using kdann::testing::make_points;
using kdann::testing::random_points;

TEST(BruteForce, Examples) {
  const PointSet data = make_points(2, {0, 0, 3, 4});
  const std::vector<double> q{0, 1};
  const auto r = brute_force_nn(data, q, 1, Metric::euclidean());
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].point_index, 0u);
  EXPECT_EQ(r[0].dist, 1.0);

  const auto all = brute_force_nn(data, q, 2, Metric::euclidean());
  EXPECT_EQ(all[1].point_index, 1u);
  EXPECT_DOUBLE_EQ(all[1].dist, std::sqrt(18.0));
  EXPECT_THROW(brute_force_nn(data, q, 3, Metric::euclidean()), UsageError);
}

TEST(BruteForce, TiesGoToLowerIndex) {
  const PointSet data = make_points(1, {1, -1, 1, -1});
  const std::vector<double> q{0};
  const auto r = brute_force_nn(data, q, 4, Metric::euclidean());
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(r[i].point_index, i);
}

TEST(BruteForce, AgreesWithExactSearch) {
  std::mt19937_64 rng(51);
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t n = 5 + inst % 40, d = 1 + inst % 6;
    const PointSet data = random_points(n, d, rng);
    const KdTree tree = build(data, 1 + inst % 3, *make_splitter(inst % 2 ? "standard" : "sliding-midpoint"));
    const PointSet q = random_points(1, d, rng);
    const std::size_t k = 1 + inst % std::min<std::size_t>(n, 5);
    const auto truth = brute_force_nn(data, q[0], k, Metric::euclidean());
    const auto got = search_recursive(tree, {q[0], k}).neighbors;
    for (std::size_t r = 0; r < k; ++r) ASSERT_EQ(got[r].dist, truth[r].dist);
  }
}

TEST(ErrorStats, Examples) {
  const std::vector<double> same{1, 2, 3};
  auto s = error_stats(same, same);
  EXPECT_EQ(s.avg_error, 0.0);
  EXPECT_EQ(s.std_dev_error, 0.0);
  EXPECT_EQ(s.max_error, 0.0);

  const std::vector<double> rep{1.1, 1.0}, tru{1.0, 1.0};
  s = error_stats(rep, tru);
  EXPECT_NEAR(s.avg_error, 0.05, 1e-15);
  EXPECT_NEAR(s.max_error, 0.1, 1e-15);
  EXPECT_NEAR(s.std_dev_error, 0.05, 1e-15);
  EXPECT_EQ(s.count, 2u);
}

TEST(ErrorStats, ZeroOverZeroIsZero) {
  const std::vector<double> zero{0.0};
  EXPECT_EQ(error_stats(zero, zero).max_error, 0.0);
}

TEST(ErrorStats, ReportedBelowTruthIsViolation) {
  const std::vector<double> rep{0.9}, tru{1.0};
  EXPECT_THROW(error_stats(rep, tru), OracleViolation);
  const std::vector<double> tiny{1.0 - 1e-14};
  EXPECT_NO_THROW(error_stats(tiny, std::vector<double>{1.0}));
}

TEST(CheckApproximation, Bounds) {
  const std::vector<double> tru{1.0, 2.0};
  EXPECT_NO_THROW(check_approximation(std::vector<double>{2.0, 4.0}, tru, 1.0));
  EXPECT_THROW(check_approximation(std::vector<double>{2.01, 4.0}, tru, 1.0), OracleViolation);
  EXPECT_THROW(check_approximation(std::vector<double>{1.0, 2.0 + 1e-15}, tru, 0.0), OracleViolation);
}

TEST(Overlap, Examples) {
  const KdTree tree = build(make_points(2, {0, 0, 1, 0, 0, 1, 1, 1}), 1, *make_splitter("standard"));
  const std::vector<double> inside{0.2, 0.3};
  EXPECT_EQ(overlap_count(tree, inside, 0.0), 1u);
  EXPECT_EQ(overlap_count(tree, inside, 10.0), 4u);
  // The ball touches the cut x = 0.5 exactly: closed overlap counts both sides.
  const std::vector<double> near_cut{0.25, 0.1};
  EXPECT_EQ(overlap_count(tree, near_cut, 0.0625), 2u);
  const std::vector<double> outside{5, 5};
  EXPECT_EQ(overlap_count(tree, outside, 1.0), 0u);
}

// Oracle: reconstruct each leaf cell and intersect it with the ball directly.
TEST(Overlap, MatchesGeometricBruteForce) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-0.3, 1.3), r(0.0, 0.6);
  for (int inst = 0; inst < 300; ++inst) {
    const Metric m = kdann::testing::all_metrics()[inst % 4];
    const std::size_t n = 1 + inst % 20;
    const KdTree tree = build(random_points(n, 2, rng), 1,
                              *make_splitter(inst % 3 == 0 ? "midpoint" : "sliding-midpoint"),
                              SplitterContext{m});
    const auto cells = tree.node_cells();
    for (int b = 0; b < 10; ++b) {
      const std::vector<double> c{u(rng), u(rng)};
      const double pr = m.power(r(rng));
      std::size_t want = 0;
      for (NodeId id = 0; id < tree.nodes().size(); ++id)
        if (tree.node(id).is_leaf() && rect_power_distance(c, cells[id], m) <= pr) ++want;
      ASSERT_EQ(overlap_count(tree, c, pr), want);
    }
  }
}

TEST(Overlap, TotalSumsPerBall) {
  std::mt19937_64 rng(62);
  const PointSet data = random_points(200, 3, rng);
  const KdTree tree = build(data, 1, *make_splitter("standard"));
  const auto balls = prepare_training(data, random_points(50, 3, rng), 0.0, Metric::euclidean());
  const auto rep = total_overlap(tree, balls);
  ASSERT_EQ(rep.per_ball.size(), balls.size());
  std::uint64_t sum = 0;
  for (std::size_t c : rep.per_ball) {
    EXPECT_GE(c, 1u);
    sum += c;
  }
  EXPECT_EQ(rep.total_overlap, sum);
}

// At eps = 0, each ball's overlapping leaves lie strictly closer than, or at,
// the nearest neighbor, so the searches must visit at least those leaves
// whose distance is strictly below it.
TEST(Overlap, LowerBoundsLeavesVisited) {
  std::mt19937_64 rng(63);
  const PointSet data = random_points(400, 2, rng);
  const KdTree tree = build(data, 1, *make_splitter("sliding-midpoint"));
  const PointSet queries = random_points(200, 2, rng);
  const auto balls = prepare_training(data, queries, 0.0, Metric::euclidean());
  const auto cells = tree.node_cells();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    std::size_t strictly_inside = 0;
    for (NodeId id = 0; id < tree.nodes().size(); ++id)
      if (tree.node(id).is_leaf() &&
          rect_power_distance(queries[i], cells[id], Metric::euclidean()) < balls[i].power_radius)
        ++strictly_inside;
    for (Traversal t : {Traversal::recursive, Traversal::priority}) {
      const auto res = search(tree, {queries[i], 1, 0.0, t});
      EXPECT_GE(res.stats.leaves_visited, strictly_inside);
      EXPECT_LE(strictly_inside, overlap_count(tree, queries[i], balls[i].power_radius));
    }
  }
}
