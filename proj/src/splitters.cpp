#include "kdann/splitters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "kdann/errors.hpp"

namespace kdann {

namespace {

struct Extent {
  double min;
  double max;
  double spread() const { return max - min; }
};

std::vector<Extent> extents(const PointSet& points, std::span<const Index> subset) {
  const std::size_t d = points.dim();
  std::vector<Extent> ext(d, {std::numeric_limits<double>::infinity(),
                              -std::numeric_limits<double>::infinity()});
  for (Index i : subset) {
    const PointView p = points[i];
    for (std::size_t a = 0; a < d; ++a) {
      ext[a].min = std::min(ext[a].min, p[a]);
      ext[a].max = std::max(ext[a].max, p[a]);
    }
  }
  return ext;
}

// Floating-point noise in side lengths and spreads should not decide a tie.
bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

// Longest cell side; ties go to the larger point spread, then the lower axis.
// Only axes with allowed[a] are considered.
std::size_t longest_side_axis(const Rect& cell, const std::vector<Extent>& ext,
                              const std::vector<bool>& allowed) {
  std::size_t best = cell.dim();
  for (std::size_t a = 0; a < cell.dim(); ++a) {
    if (!allowed[a]) continue;
    if (best == cell.dim()) {
      best = a;
      continue;
    }
    const double side = cell.side(a);
    const double best_side = cell.side(best);
    if (nearly_equal(side, best_side)) {
      if (ext[a].spread() > ext[best].spread() && !nearly_equal(ext[a].spread(), ext[best].spread()))
        best = a;
    } else if (side > best_side) {
      best = a;
    }
  }
  return best;
}

struct PlaneCounts {
  std::size_t below;     // coords < cut
  std::size_t at_most;   // coords <= cut
};

// Reorders subset into (< cut | == cut | > cut).
PlaneCounts plane_partition(const PointSet& points, std::span<Index> subset, std::size_t axis,
                            double cut) {
  auto at = [&](Index i) { return points.coord(i, axis); };
  auto mid = std::partition(subset.begin(), subset.end(), [&](Index i) { return at(i) < cut; });
  auto hi = std::partition(mid, subset.end(), [&](Index i) { return at(i) == cut; });
  return {static_cast<std::size_t>(mid - subset.begin()),
          static_cast<std::size_t>(hi - subset.begin())};
}

// Balances points lying exactly on the plane between the two sides.
std::size_t balanced_low_count(const PlaneCounts& c, std::size_t n) {
  return std::clamp(n / 2, c.below, c.at_most);
}

class StandardSplitter final : public Splitter {
 public:
  std::string_view name() const override { return "standard"; }
  SplitDecision split(const SplitInput& in) const override {
    return standard_split(in.points, in.cell, in.subset);
  }
};

class MidpointSplitter final : public Splitter {
 public:
  std::string_view name() const override { return "midpoint"; }
  bool requires_nontrivial() const override { return false; }
  SplitDecision split(const SplitInput& in) const override {
    return midpoint_split(in.points, in.cell, in.subset);
  }
};

class SlidingMidpointSplitter final : public Splitter {
 public:
  std::string_view name() const override { return "sliding-midpoint"; }
  SplitDecision split(const SplitInput& in) const override {
    return sliding_midpoint_split(in.points, in.cell, in.subset);
  }
};

class MinAmbiguitySplitter final : public Splitter {
 public:
  std::string_view name() const override { return "min-ambiguity"; }
  bool uses_training() const override { return true; }
  SplitDecision split(const SplitInput& in) const override {
    if (in.context.training_balls.empty())
      throw UsageError("min-ambiguity splitter requires a nonempty training set");
    AmbiguitySplit result = min_ambiguity_split(in.points, in.cell, in.subset,
                                                in.context.training_balls, in.balls,
                                                in.context.metric);
    result.decision.score = result.score;
    return result.decision;
  }
};

}  // namespace

std::unique_ptr<Splitter> make_splitter(std::string_view name) {
  if (name == "standard") return std::make_unique<StandardSplitter>();
  if (name == "midpoint") return std::make_unique<MidpointSplitter>();
  if (name == "sliding-midpoint") return std::make_unique<SlidingMidpointSplitter>();
  if (name == "min-ambiguity") return std::make_unique<MinAmbiguitySplitter>();
  throw UsageError("unknown splitter '" + std::string(name) +
                   "' (expected standard, midpoint, sliding-midpoint or min-ambiguity)");
}

std::vector<std::string_view> splitter_names() {
  return {"standard", "midpoint", "sliding-midpoint", "min-ambiguity"};
}

SplitDecision standard_split(const PointSet& points, const Rect& cell, std::span<Index> subset) {
  check_same_dim(points.dim(), cell.dim(), "standard_split");
  const std::size_t n = subset.size();
  if (n < 2) return SplitDecision::unsplittable();
  const auto ext = extents(points, subset);
  std::size_t axis = 0;
  for (std::size_t a = 1; a < ext.size(); ++a)
    if (ext[a].spread() > ext[axis].spread()) axis = a;
  if (!(ext[axis].spread() > 0.0)) return SplitDecision::unsplittable();

  auto less = [&](Index x, Index y) {
    const double cx = points.coord(x, axis);
    const double cy = points.coord(y, axis);
    return cx < cy || (cx == cy && x < y);
  };
  const std::size_t low_count = n / 2;
  std::nth_element(subset.begin(), subset.begin() + static_cast<std::ptrdiff_t>(low_count),
                   subset.end(), less);
  const double upper = points.coord(subset[low_count], axis);
  double cut = upper;
  if (n % 2 == 0) {
    double lower = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < low_count; ++i) lower = std::max(lower, points.coord(subset[i], axis));
    cut = std::midpoint(lower, upper);
  }
  return SplitDecision::make(axis, cut, low_count);
}

SplitDecision midpoint_split(const PointSet& points, const Rect& cell, std::span<Index> subset) {
  check_same_dim(points.dim(), cell.dim(), "midpoint_split");
  if (subset.empty()) return SplitDecision::unsplittable();
  const auto ext = extents(points, subset);
  const std::size_t axis = longest_side_axis(cell, ext, std::vector<bool>(cell.dim(), true));
  if (!(cell.side(axis) > 0.0)) return SplitDecision::unsplittable();
  const double cut = std::midpoint(cell.lo[axis], cell.hi[axis]);
  const PlaneCounts counts = plane_partition(points, subset, axis, cut);
  return SplitDecision::make(axis, cut, balanced_low_count(counts, subset.size()));
}

SplitDecision sliding_midpoint_split(const PointSet& points, const Rect& cell,
                                     std::span<Index> subset) {
  check_same_dim(points.dim(), cell.dim(), "sliding_midpoint_split");
  const std::size_t n = subset.size();
  if (n < 2) return SplitDecision::unsplittable();
  const auto ext = extents(points, subset);
  std::vector<bool> allowed(cell.dim(), true);
  std::size_t axis = longest_side_axis(cell, ext, allowed);
  if (!(ext[axis].spread() > 0.0)) {
    // Sliding along an axis where every point coincides would only peel off
    // one point at a time; use the longest side among axes where points differ.
    for (std::size_t a = 0; a < cell.dim(); ++a) allowed[a] = ext[a].spread() > 0.0;
    if (std::none_of(allowed.begin(), allowed.end(), [](bool b) { return b; }))
      return SplitDecision::unsplittable();
    axis = longest_side_axis(cell, ext, allowed);
  }

  const double cut = std::midpoint(cell.lo[axis], cell.hi[axis]);
  const PlaneCounts counts = plane_partition(points, subset, axis, cut);
  auto coord = [&](std::size_t pos) { return points.coord(subset[pos], axis); };
  // Position of the extreme point on the axis, ties to the lowest point index.
  auto extreme = [&](bool want_min) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const double c = coord(i);
      const double b = coord(best);
      if (want_min ? c < b : c > b) best = i;
      else if (c == b && subset[i] < subset[best]) best = i;
    }
    return best;
  };
  if (counts.at_most == 0) {
    // Everything lies above the midpoint: slide down onto the lowest point.
    const std::size_t pos = extreme(true);
    std::swap(subset[0], subset[pos]);
    return SplitDecision::make(axis, coord(0), 1);
  }
  if (counts.below == n) {
    const std::size_t pos = extreme(false);
    std::swap(subset[n - 1], subset[pos]);
    return SplitDecision::make(axis, coord(n - 1), n - 1);
  }
  return SplitDecision::make(axis, cut, balanced_low_count(counts, n));
}

AmbiguitySplit min_ambiguity_split(const PointSet& points, const Rect& cell,
                                   std::span<Index> subset,
                                   std::span<const TrainingBall> training,
                                   std::span<const BallRef> balls, Metric metric) {
  check_same_dim(points.dim(), cell.dim(), "min_ambiguity_split");
  AmbiguitySplit best;
  const std::size_t n = subset.size();
  if (n < 2) return best;
  const std::size_t d = cell.dim();
  const std::size_t nb = balls.size();

  // Per ball and axis: the ball's power distance to the cell ignoring that
  // axis. Whether the ball meets a subcell then depends on the cut alone.
  std::vector<double> rest(metric.is_max() ? 0 : nb * d);
  if (!metric.is_max()) {
    std::vector<double> terms(d), suffix(d + 1);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& center = training[balls[b].ball].center;
      check_same_dim(center.size(), d, "training ball");
      for (std::size_t a = 0; a < d; ++a) {
        double gap = 0.0;
        if (center[a] < cell.lo[a]) gap = cell.lo[a] - center[a];
        else if (center[a] > cell.hi[a]) gap = center[a] - cell.hi[a];
        terms[a] = metric.term(gap);
      }
      suffix[d] = 0.0;
      for (std::size_t a = d; a-- > 0;) suffix[a] = suffix[a + 1] + terms[a];
      double prefix = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        rest[b * d + a] = prefix + suffix[a + 1];
        prefix += terms[a];
      }
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, Index>> proj(n);
  std::vector<double> lows(nb), highs(nb);
  bool found = false;
  std::size_t best_imbalance = 0;

  for (std::size_t axis = 0; axis < d; ++axis) {
    for (std::size_t i = 0; i < n; ++i) proj[i] = {points.coord(subset[i], axis), subset[i]};
    std::sort(proj.begin(), proj.end());
    if (proj.front().first == proj.back().first) continue;

    // A ball meets the low subcell [lo, cut] iff cut >= lows[b], and the high
    // subcell [cut, hi] iff cut <= highs[b].
    for (std::size_t b = 0; b < nb; ++b) {
      const TrainingBall& ball = training[balls[b].ball];
      const double q = ball.center[axis];
      double reach;
      if (metric.is_max()) {
        reach = ball.power_radius;
      } else {
        reach = metric.root(std::max(0.0, ball.power_radius - rest[b * d + axis]));
      }
      lows[b] = q < cell.lo[axis] ? -kInf : q - reach;
      highs[b] = q > cell.hi[axis] ? kInf : q + reach;
    }
    std::sort(lows.begin(), lows.end());
    std::sort(highs.begin(), highs.end());

    std::size_t low_hits = 0;      // lows <= cut
    std::size_t high_misses = 0;   // highs < cut
    for (std::size_t j = 0; j + 1 < n; ++j) {
      if (proj[j].first == proj[j + 1].first) continue;
      const double cut = std::midpoint(proj[j].first, proj[j + 1].first);
      while (low_hits < nb && lows[low_hits] <= cut) ++low_hits;
      while (high_misses < nb && highs[high_misses] < cut) ++high_misses;
      const std::size_t s1 = j + 1;
      const std::size_t s2 = n - s1;
      const std::size_t t1 = low_hits;
      const std::size_t t2 = nb - high_misses;
      const auto score = static_cast<std::int64_t>(s1 * t1 + s2 * t2);
      const std::size_t imbalance = s1 > s2 ? s1 - s2 : s2 - s1;
      if (!found || score < best.score || (score == best.score && imbalance < best_imbalance)) {
        found = true;
        best.decision = SplitDecision::make(axis, cut, s1);
        best.score = score;
        best.data_low = s1;
        best.data_high = s2;
        best.balls_low = t1;
        best.balls_high = t2;
        best_imbalance = imbalance;
      }
    }
  }
  if (!found) return best;

  const std::size_t axis = best.decision.axis;
  std::sort(subset.begin(), subset.end(), [&](Index x, Index y) {
    const double cx = points.coord(x, axis);
    const double cy = points.coord(y, axis);
    return cx < cy || (cx == cy && x < y);
  });
  return best;
}

}  // namespace kdann
