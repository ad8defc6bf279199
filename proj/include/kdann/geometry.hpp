#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kdann {

using Index = std::uint32_t;
using PointView = std::span<const double>;

/// Minkowski L_m metric, m >= 1, or the max metric.
///
/// All comparisons inside the library are made on "power distances": the sum
/// of |p_i - q_i|^m before the m-th root is taken (for the max metric, the
/// max itself). These are order-equivalent to true distances.
class Metric {
 public:
  static Metric minkowski(int order);
  static Metric max_metric() { return Metric(0); }
  static Metric euclidean() { return Metric(2); }
  /// Accepts "1", "2", ..., or "inf".
  static Metric parse(std::string_view text);

  Metric() = default;

  bool is_max() const { return order_ == 0; }
  /// Order m; 0 encodes the max metric.
  int order() const { return order_; }
  std::string name() const;

  /// Per-axis term |x|^m (or |x| for max) for a nonnegative input.
  double term(double abs_diff) const {
    switch (order_) {
      case 0:
      case 1:
        return abs_diff;
      case 2:
        return abs_diff * abs_diff;
      default:
        return std::pow(abs_diff, order_);
    }
  }
  /// Combine an accumulated power distance with one more per-axis term.
  double accumulate(double acc, double term) const {
    return order_ == 0 ? (term > acc ? term : acc) : acc + term;
  }
  /// True distance from a power distance.
  double root(double power_dist) const {
    switch (order_) {
      case 0:
      case 1:
        return power_dist;
      case 2:
        return std::sqrt(power_dist);
      default:
        return std::pow(power_dist, 1.0 / order_);
    }
  }
  /// Power distance from a true distance.
  double power(double dist) const { return term(dist); }

  friend bool operator==(const Metric&, const Metric&) = default;

 private:
  explicit Metric(int order) : order_(order) {}
  int order_ = 2;
};

/// Dense row-major set of d-dimensional points, referenced by index.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  /// Takes ownership of `coords` (size must be a multiple of dim, all finite).
  PointSet(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  PointView operator[](std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  std::span<double> mutable_point(std::size_t i) { return {coords_.data() + i * dim_, dim_}; }
  double coord(std::size_t i, std::size_t axis) const { return coords_[i * dim_ + axis]; }

  void push_back(PointView p);
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }
  const std::vector<double>& coords() const { return coords_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// Closed axis-aligned rectangle [lo, hi].
struct Rect {
  std::vector<double> lo;
  std::vector<double> hi;

  Rect() = default;
  Rect(std::vector<double> lo_, std::vector<double> hi_);

  std::size_t dim() const { return lo.size(); }
  double side(std::size_t axis) const { return hi[axis] - lo[axis]; }
  bool contains(PointView p) const;
  /// Longest side over shortest side; +infinity when some side is zero.
  double aspect_ratio() const;

  /// Tight bounding rectangle of the listed points (all points if empty list).
  static Rect bounding(const PointSet& points, std::span<const Index> subset = {});

  friend bool operator==(const Rect&, const Rect&) = default;
};

double power_distance(PointView p, PointView q, Metric metric);

/// Result of a distance computation that may stop early.
struct PartialDistance {
  std::optional<double> value;  // empty when the threshold was reached
  std::size_t coords_read = 0;

  bool exceeded() const { return !value.has_value(); }
};

/// Accumulates per-axis terms and stops once the running value reaches
/// `threshold`. With threshold = +inf this equals power_distance exactly.
PartialDistance partial_power_distance(PointView p, PointView q, Metric metric,
                                       double threshold);

/// Power distance from q to the nearest point of r (0 iff q in r).
double rect_power_distance(PointView q, const Rect& r, Metric metric);

struct ChildDistances {
  double near_dist;
  double far_dist;
  bool query_on_low_side;  // true: near child is the low child
};

/// Constant-time update of the cell distance when a cell with extent
/// [cell_lo, cell_hi] on `axis` is cut at `cut`. `parent_dist` must be the
/// rect power distance from q to the parent cell.
ChildDistances child_power_distance(double parent_dist, PointView q, std::size_t axis,
                                    double cut, double cell_lo, double cell_hi,
                                    Metric metric);

void check_same_dim(std::size_t a, std::size_t b, const char* what);

namespace detail {

// Unchecked kernel behind child_power_distance; the search loops call it
// directly once the tree has been validated at construction.
inline ChildDistances child_distances(double parent_dist, double q, double cut,
                                      double cell_lo, double cell_hi, Metric metric) {
  if (q < cut) {
    const double gap = cut - q;
    if (metric.is_max()) return {parent_dist, gap > parent_dist ? gap : parent_dist, true};
    const double old = cell_lo > q ? metric.term(cell_lo - q) : 0.0;
    return {parent_dist, parent_dist - old + metric.term(gap), true};
  }
  const double gap = q - cut;
  if (metric.is_max()) return {parent_dist, gap > parent_dist ? gap : parent_dist, false};
  const double old = q > cell_hi ? metric.term(q - cell_hi) : 0.0;
  return {parent_dist, parent_dist - old + metric.term(gap), false};
}

}  // namespace detail

}  // namespace kdann
