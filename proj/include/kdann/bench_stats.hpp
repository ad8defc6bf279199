#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kdann/geometry.hpp"
#include "kdann/kdtree.hpp"
#include "kdann/search.hpp"
#include "kdann/splitters.hpp"

namespace kdann {

/// Exact k nearest neighbors by full scan, ties to the lower index. This is
/// the ground truth every search result is checked against.
std::vector<Neighbor> brute_force_nn(const PointSet& data, PointView query, std::size_t k,
                                     Metric metric);

/// Relative errors e = reported / true - 1, with e = 0 when both are zero.
struct ErrorStats {
  double avg_error = 0.0;
  double std_dev_error = 0.0;  // population
  double max_error = 0.0;
  std::size_t count = 0;
};

/// Throws OracleViolation when a reported distance is below the true one by
/// more than 1e-12 relative.
ErrorStats error_stats(std::span<const double> reported, std::span<const double> truth);

/// Throws OracleViolation unless every reported[i] <= (1+eps) * truth[i]
/// (1e-12 relative slack) and, for eps = 0, reported[i] == truth[i].
void check_approximation(std::span<const double> reported, std::span<const double> truth,
                         double epsilon);

/// Leaf cells whose closed cell meets the closed ball of the given power
/// radius around `center`.
std::size_t overlap_count(const KdTree& tree, PointView center, double power_radius);

struct OverlapReport {
  std::vector<std::size_t> per_ball;
  std::uint64_t total_overlap = 0;
};

OverlapReport total_overlap(const KdTree& tree, std::span<const TrainingBall> balls);

}  // namespace kdann
