#include "kdann/bench_stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "kdann/errors.hpp"

namespace kdann {

std::vector<Neighbor> brute_force_nn(const PointSet& data, PointView query, std::size_t k,
                                     Metric metric) {
  check_same_dim(query.size(), data.dim(), "brute_force_nn");
  if (k < 1 || k > data.size())
    throw UsageError("brute_force_nn: k must be in [1, " + std::to_string(data.size()) + "]");
  std::vector<std::pair<double, Index>> all(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    all[i] = {power_distance(data[i], query, metric), static_cast<Index>(i)};
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({all[i].second, all[i].first, metric.root(all[i].first)});
  return out;
}

namespace {

constexpr double kSlack = 1e-12;

double relative_error(double reported, double truth, std::size_t i) {
  if (reported < truth * (1.0 - kSlack)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "entry " << i << ": reported distance " << reported << " is below the true distance "
        << truth;
    throw OracleViolation(msg.str());
  }
  if (truth == 0.0) return 0.0;
  return std::max(0.0, reported / truth - 1.0);
}

}  // namespace

ErrorStats error_stats(std::span<const double> reported, std::span<const double> truth) {
  if (reported.size() != truth.size())
    throw UsageError("error_stats: reported and true sequences differ in length");
  ErrorStats s;
  s.count = reported.size();
  if (s.count == 0) return s;
  std::vector<double> errors(s.count);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.count; ++i) {
    errors[i] = relative_error(reported[i], truth[i], i);
    sum += errors[i];
    s.max_error = std::max(s.max_error, errors[i]);
  }
  s.avg_error = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (double e : errors) sq += (e - s.avg_error) * (e - s.avg_error);
  s.std_dev_error = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

void check_approximation(std::span<const double> reported, std::span<const double> truth,
                         double epsilon) {
  if (reported.size() != truth.size())
    throw UsageError("check_approximation: sequences differ in length");
  for (std::size_t i = 0; i < reported.size(); ++i) {
    const bool ok = epsilon == 0.0 ? reported[i] == truth[i]
                                   : reported[i] <= (1.0 + epsilon) * truth[i] * (1.0 + kSlack);
    if (!ok || reported[i] < truth[i] * (1.0 - kSlack)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "entry " << i << ": reported distance " << reported[i] << " vs true " << truth[i]
          << " violates the (1+" << epsilon << ") bound";
      throw OracleViolation(msg.str());
    }
  }
}

namespace {

std::size_t count_overlaps(const KdTree& tree, NodeId id, double dist, PointView center,
                           double power_radius) {
  const Node& n = tree.node(id);
  if (n.is_leaf()) return 1;
  const ChildDistances cd = detail::child_distances(
      dist, center[static_cast<std::size_t>(n.axis)], n.cut, n.cell_lo, n.cell_hi, tree.metric());
  const NodeId low = KdTree::low_child(id);
  const double low_dist = cd.query_on_low_side ? cd.near_dist : cd.far_dist;
  const double high_dist = cd.query_on_low_side ? cd.far_dist : cd.near_dist;
  std::size_t total = 0;
  if (low_dist <= power_radius) total += count_overlaps(tree, low, low_dist, center, power_radius);
  if (high_dist <= power_radius) total += count_overlaps(tree, n.high, high_dist, center, power_radius);
  return total;
}

}  // namespace

std::size_t overlap_count(const KdTree& tree, PointView center, double power_radius) {
  check_same_dim(center.size(), tree.dim(), "overlap_count");
  const double dist = rect_power_distance(center, tree.bounding_rect(), tree.metric());
  if (dist > power_radius) return 0;
  return count_overlaps(tree, KdTree::root(), dist, center, power_radius);
}

OverlapReport total_overlap(const KdTree& tree, std::span<const TrainingBall> balls) {
  OverlapReport report;
  report.per_ball.reserve(balls.size());
  for (const TrainingBall& b : balls) {
    report.per_ball.push_back(overlap_count(tree, b.center, b.power_radius));
    report.total_overlap += report.per_ball.back();
  }
  return report;
}

}  // namespace kdann
