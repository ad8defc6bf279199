#include <string>

#include "kdann/errors.hpp"
#include "kdann/kdtree.hpp"
#include "kdann/parallel.hpp"
#include "kdann/search.hpp"
#include "kdann/splitters.hpp"

namespace kdann {

std::vector<TrainingBall> prepare_training(const PointSet& data, const PointSet& queries,
                                           double epsilon, Metric metric) {
  if (data.empty()) throw UsageError("prepare_training: data set is empty");
  if (!(epsilon >= 0.0)) throw UsageError("prepare_training: epsilon must be >= 0");
  check_same_dim(queries.dim(), data.dim(), "prepare_training");

  const auto splitter = make_splitter("sliding-midpoint");
  SplitterContext context;
  context.metric = metric;
  const KdTree aux = build(data, 1, *splitter, context);

  const double shrink = metric.power(1.0 + epsilon);
  std::vector<TrainingBall> balls(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    const PointView q = queries[i];
    const SearchResult found = search_priority(aux, {q, 1, epsilon, Traversal::priority});
    const Neighbor& nn = found.neighbors.front();
    TrainingBall& ball = balls[i];
    ball.center.assign(q.begin(), q.end());
    ball.radius = nn.dist / (1.0 + epsilon);
    ball.power_radius = nn.power_dist / shrink;
  });
  return balls;
}

}  // namespace kdann
