#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "kdann/bench_stats.hpp"
#include "kdann/distributions.hpp"
#include "kdann/errors.hpp"
#include "kdann/kdtree.hpp"
#include "kdann/search.hpp"
#include "test_util.hpp"

using namespace kdann;
using kdann::testing::close_rel;
using kdann::testing::make_points;
using kdann::testing::random_points;

namespace {

const Traversal kTraversals[] = {Traversal::recursive, Traversal::priority};

KdTree square_tree() {
  return build(make_points(2, {0, 0, 1, 0, 0, 1, 1, 1}), 1, *make_splitter("standard"));
}

PointSet clustered(std::size_t n, std::uint64_t seed, DistributionKind kind) {
  DistributionSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.sigma_thin = 0.05;
  spec.d_max = 4;
  return generate(spec, n, 8).points;
}

}  // namespace

TEST(Search, NearestCorner) {
  const KdTree tree = square_tree();
  const std::vector<double> q{0.1, 0.1};
  for (Traversal t : kTraversals) {
    const auto r = search(tree, {q, 1, 0.0, t});
    ASSERT_EQ(r.neighbors.size(), 1u);
    EXPECT_EQ(r.neighbors[0].point_index, 0u);
    EXPECT_DOUBLE_EQ(r.neighbors[0].dist, std::sqrt(0.02));
  }
}

TEST(Search, AllFourAtCenter) {
  const KdTree tree = square_tree();
  const std::vector<double> q{0.5, 0.5};
  for (Traversal t : kTraversals) {
    const auto r = search(tree, {q, 4, 0.0, t});
    ASSERT_EQ(r.neighbors.size(), 4u);
    std::set<Index> ids;
    for (const auto& nb : r.neighbors) {
      EXPECT_EQ(nb.power_dist, 0.5);
      EXPECT_DOUBLE_EQ(nb.dist, std::sqrt(0.5));
      ids.insert(nb.point_index);
    }
    EXPECT_EQ(ids.size(), 4u);
    // Equal distances come back in index order.
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.neighbors[i].point_index, i);
  }
}

TEST(Search, InvalidRequests) {
  const KdTree tree = square_tree();
  const std::vector<double> q{0.5, 0.5}, bad_dim{0.5};
  EXPECT_THROW(search(tree, {q, 5}), UsageError);
  EXPECT_THROW(search(tree, {q, 0}), UsageError);
  EXPECT_THROW(search(tree, {q, 1, -1.0}), UsageError);
  EXPECT_THROW(search(tree, {bad_dim, 1}), UsageError);
}

// Oracle: brute-force scan. At eps = 0 the distance sequence must match
// exactly; otherwise each rank is within (1+eps) of the true one.
TEST(Search, SoundAgainstBruteForce) {
  const DistributionKind kinds[] = {DistributionKind::uniform, DistributionKind::clustered_gaussian,
                                    DistributionKind::clustered_ortho_ellipsoids,
                                    DistributionKind::clustered_ellipsoids};
  std::uint64_t seed = 1;
  for (DistributionKind kind : kinds) {
    const PointSet data = clustered(1500, seed++, kind);
    const PointSet queries = clustered(150, seed++, kind);
    for (auto splitter : {"standard", "sliding-midpoint", "midpoint"}) {
      for (Metric m : kdann::testing::all_metrics()) {
        KdTree tree = build(data, 1 + seed % 3, *make_splitter(splitter),
                            SplitterContext{m, {}, 0.0});
        for (std::size_t k : {1u, 5u}) {
          for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            const auto truth = brute_force_nn(data, queries[qi], k, m);
            for (double eps : {0.0, 1.0, 2.0, 3.0}) {
              for (Traversal t : kTraversals) {
                const auto got = search(tree, {queries[qi], k, eps, t}).neighbors;
                ASSERT_EQ(got.size(), k);
                for (std::size_t r = 0; r < k; ++r) {
                  if (eps == 0.0) {
                    ASSERT_EQ(got[r].power_dist, truth[r].power_dist)
                        << splitter << " " << m.name() << " q" << qi;
                  } else {
                    ASSERT_LE(got[r].dist, (1 + eps) * truth[r].dist * (1 + 1e-12))
                        << splitter << " " << m.name() << " q" << qi;
                  }
                  ASSERT_EQ(got[r].power_dist, power_distance(data[got[r].point_index], queries[qi], m));
                }
              }
            }
          }
        }
      }
    }
  }
}

TEST(Search, TreeMetricIsUsed) {
  std::mt19937_64 rng(6);
  const PointSet data = random_points(300, 3, rng);
  const KdTree tree = build(data, 1, *make_splitter("standard"), SplitterContext{Metric::minkowski(1)});
  const std::vector<double> q{0.3, 0.6, 0.1};
  const auto got = search(tree, {q, 3});
  const auto truth = brute_force_nn(data, q, 3, Metric::minkowski(1));
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(got.neighbors[r].power_dist, truth[r].power_dist);
}

TEST(Search, PriorityVisitsLeavesInOrderWithExactCellDistances) {
  std::mt19937_64 rng(13);
  for (auto splitter : {"standard", "sliding-midpoint"}) {
    for (Metric m : kdann::testing::all_metrics()) {
      const KdTree tree = build(random_points(800, 4, rng), 1, *make_splitter(splitter),
                                SplitterContext{m, {}, 0.0});
      const auto cells = tree.node_cells();
      for (int qi = 0; qi < 100; ++qi) {
        const PointSet q = random_points(1, 4, rng, -0.5, 1.5);
        SearchTrace trace;
        search_priority(tree, {q[0], std::size_t(1 + qi % 5), double(qi % 3)}, &trace);
        double last = -1.0;
        for (const NodeVisit& v : trace.visits) {
          const double direct = rect_power_distance(q[0], cells[v.node], m);
          ASSERT_TRUE(close_rel(v.cell_dist, direct, 1e-12) || std::abs(v.cell_dist - direct) < 1e-15)
              << v.cell_dist << " vs " << direct;
          if (!v.leaf) continue;
          ASSERT_GE(v.cell_dist, last);
          last = v.cell_dist;
        }
      }
    }
  }
}

// At eps = 0, every leaf strictly closer than the true nearest neighbor
// must have been visited.
TEST(Search, VisitsEveryLeafCloserThanTheAnswer) {
  std::mt19937_64 rng(17);
  const PointSet data = random_points(600, 3, rng);
  for (auto splitter : {"standard", "sliding-midpoint"}) {
    const KdTree tree = build(data, 1, *make_splitter(splitter));
    const auto cells = tree.node_cells();
    for (int qi = 0; qi < 200; ++qi) {
      const PointSet q = random_points(1, 3, rng, -0.2, 1.2);
      const double nn = brute_force_nn(data, q[0], 1, Metric::euclidean())[0].power_dist;
      for (Traversal t : kTraversals) {
        SearchTrace trace;
        search(tree, {q[0], 1, 0.0, t}, &trace);
        std::set<NodeId> seen;
        for (const auto& v : trace.visits)
          if (v.leaf) seen.insert(v.node);
        for (NodeId id = 0; id < tree.nodes().size(); ++id) {
          if (!tree.node(id).is_leaf()) continue;
          if (rect_power_distance(q[0], cells[id], Metric::euclidean()) < nn)
            ASSERT_TRUE(seen.count(id)) << "leaf " << id << " skipped";
        }
      }
    }
  }
}

TEST(Search, StatsAreDeterministicAndConsistent) {
  std::mt19937_64 rng(19);
  const KdTree tree = build(random_points(1000, 6, rng), 1, *make_splitter("sliding-midpoint"));
  for (int qi = 0; qi < 50; ++qi) {
    const PointSet q = random_points(1, 6, rng);
    for (Traversal t : kTraversals) {
      const SearchRequest req{q[0], 3, 1.0, t};
      const auto a = search(tree, req), b = search(tree, req);
      EXPECT_EQ(a.stats, b.stats);
      EXPECT_EQ(a.neighbors, b.neighbors);
      EXPECT_LE(a.stats.leaves_visited, a.stats.nodes_visited);
      EXPECT_LE(a.stats.coordinate_accesses, 6 * a.stats.distance_calculations);
      EXPECT_GE(a.stats.distance_calculations, a.stats.leaves_visited);
    }
  }
}

TEST(Search, PriorityAndRecursiveAgreeWhenExact) {
  std::mt19937_64 rng(23);
  const PointSet data = clustered(2000, 9, DistributionKind::clustered_ortho_ellipsoids);
  const KdTree tree = build(data, 1, *make_splitter("standard"));
  const PointSet queries = clustered(200, 10, DistributionKind::clustered_ortho_ellipsoids);
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const auto a = search_recursive(tree, {queries[qi], 1});
    const auto b = search_priority(tree, {queries[qi], 1});
    EXPECT_EQ(a.neighbors[0].power_dist, b.neighbors[0].power_dist);
  }
}

TEST(Search, ZeroDistanceQueries) {
  std::mt19937_64 rng(29);
  const PointSet data = random_points(100, 2, rng);
  const KdTree tree = build(data, 1, *make_splitter("sliding-midpoint"));
  for (std::size_t i = 0; i < data.size(); ++i)
    for (Traversal t : kTraversals) {
      const auto r = search(tree, {data[i], 1, 2.0, t});
      EXPECT_EQ(r.neighbors[0].point_index, i);
      EXPECT_EQ(r.neighbors[0].dist, 0.0);
    }
}
