#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kdann/geometry.hpp"

namespace kdann {

/// Outcome of asking a splitting method to cut a cell.
///
/// On SPLIT the splitter has reordered the subset in place so that the first
/// `low_count` indices form the low side (coords[axis] <= cut) and the rest the
/// high side (coords[axis] >= cut).
struct SplitDecision {
  enum class Kind { split, unsplittable };

  Kind kind = Kind::unsplittable;
  std::size_t axis = 0;
  double cut = 0.0;
  std::size_t low_count = 0;
  /// Candidate-graph edge count of the children (minimum-ambiguity only).
  std::optional<std::int64_t> score;

  static SplitDecision unsplittable() { return {}; }
  static SplitDecision make(std::size_t axis, double cut, std::size_t low_count) {
    return {Kind::split, axis, cut, low_count, std::nullopt};
  }
  bool is_split() const { return kind == Kind::split; }
};

/// A training query point with its shrunken nearest-neighbor ball.
struct TrainingBall {
  std::vector<double> center;
  double radius = 0.0;
  double power_radius = 0.0;
};

/// A training ball known to intersect the current cell, with its cached
/// power distance to that cell.
struct BallRef {
  Index ball;
  double cell_dist;
};

struct SplitterContext {
  Metric metric = Metric::euclidean();
  /// Required by minimum-ambiguity, ignored by the others. Not owned.
  std::span<const TrainingBall> training_balls;
  double epsilon = 0.0;
};

struct SplitInput {
  const PointSet& points;
  const Rect& cell;
  std::span<Index> subset;
  std::span<const BallRef> balls;
  const SplitterContext& context;
};

class Splitter {
 public:
  virtual ~Splitter() = default;

  virtual std::string_view name() const = 0;
  virtual SplitDecision split(const SplitInput& in) const = 0;
  /// Whether build must reject partitions with an empty side.
  virtual bool requires_nontrivial() const { return true; }
  /// Whether build must track which training balls meet each cell.
  virtual bool uses_training() const { return false; }
};

/// "standard" | "midpoint" | "sliding-midpoint" | "min-ambiguity".
std::unique_ptr<Splitter> make_splitter(std::string_view name);
std::vector<std::string_view> splitter_names();

/// Max-spread axis (ties to the lowest axis), cut at the median.
SplitDecision standard_split(const PointSet& points, const Rect& cell, std::span<Index> subset);

/// Bisects the longest cell side; may leave one side empty.
SplitDecision midpoint_split(const PointSet& points, const Rect& cell, std::span<Index> subset);

/// Midpoint split that slides the plane onto the nearest point when the
/// midpoint would leave one side empty.
SplitDecision sliding_midpoint_split(const PointSet& points, const Rect& cell,
                                     std::span<Index> subset);

struct AmbiguitySplit {
  SplitDecision decision;
  std::int64_t score = 0;
  std::size_t data_low = 0;
  std::size_t data_high = 0;
  std::size_t balls_low = 0;
  std::size_t balls_high = 0;
};

/// Chooses the orthogonal plane minimizing |S1|*|T1| + |S2|*|T2| over all
/// nontrivial cuts, where T_i counts the training balls meeting subcell i.
///
/// Candidate cuts are midpoints between consecutive distinct data
/// projections. Ties go to the most balanced data split, then the lowest
/// axis, then the lowest cut. `balls` must list exactly the training balls
/// that intersect `cell`.
AmbiguitySplit min_ambiguity_split(const PointSet& points, const Rect& cell,
                                   std::span<Index> subset,
                                   std::span<const TrainingBall> training,
                                   std::span<const BallRef> balls, Metric metric);

/// Builds shrunken nearest-neighbor balls for a training set: each radius is
/// the (1+eps)-approximate NN distance divided by (1+eps). The approximate
/// distances come from priority search on an auxiliary sliding-midpoint tree.
std::vector<TrainingBall> prepare_training(const PointSet& data, const PointSet& queries,
                                           double epsilon, Metric metric);

}  // namespace kdann
