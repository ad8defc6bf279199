#include "kdann/geometry.hpp"

#include <algorithm>
#include <charconv>

#include "kdann/errors.hpp"

namespace kdann {

Metric Metric::minkowski(int order) {
  if (order < 1) throw UsageError("metric order must be >= 1, got " + std::to_string(order));
  return Metric(order);
}

Metric Metric::parse(std::string_view text) {
  if (text == "inf" || text == "INF" || text == "infinity" || text == "max") return max_metric();
  int order = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), order);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw UsageError("invalid metric '" + std::string(text) + "' (expected integer >= 1 or 'inf')");
  return minkowski(order);
}

std::string Metric::name() const { return is_max() ? "inf" : std::to_string(order_); }

PointSet::PointSet(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw UsageError("point dimension must be positive");
  if (coords_.size() % dim_ != 0)
    throw UsageError("coordinate count " + std::to_string(coords_.size()) +
                     " is not a multiple of dimension " + std::to_string(dim_));
  for (double c : coords_)
    if (!std::isfinite(c)) throw UsageError("point coordinates must be finite");
}

void PointSet::push_back(PointView p) {
  check_same_dim(p.size(), dim_, "point");
  for (double c : p)
    if (!std::isfinite(c)) throw UsageError("point coordinates must be finite");
  coords_.insert(coords_.end(), p.begin(), p.end());
}

Rect::Rect(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  check_same_dim(lo.size(), hi.size(), "rect bounds");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw UsageError("rect lo must not exceed hi on axis " + std::to_string(i));
}

bool Rect::contains(PointView p) const {
  check_same_dim(p.size(), dim(), "point");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

double Rect::aspect_ratio() const {
  double longest = 0.0;
  double shortest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dim(); ++i) {
    longest = std::max(longest, side(i));
    shortest = std::min(shortest, side(i));
  }
  if (!(shortest > 0.0)) return std::numeric_limits<double>::infinity();
  return longest / shortest;
}

Rect Rect::bounding(const PointSet& points, std::span<const Index> subset) {
  if (points.empty()) throw UsageError("bounding rectangle of an empty point set");
  const std::size_t d = points.dim();
  Rect r;
  r.lo.assign(d, std::numeric_limits<double>::infinity());
  r.hi.assign(d, -std::numeric_limits<double>::infinity());
  auto extend = [&](std::size_t i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double c = points.coord(i, a);
      r.lo[a] = std::min(r.lo[a], c);
      r.hi[a] = std::max(r.hi[a], c);
    }
  };
  if (subset.empty()) {
    for (std::size_t i = 0; i < points.size(); ++i) extend(i);
  } else {
    for (Index i : subset) extend(i);
  }
  return r;
}

void check_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw UsageError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
}

double power_distance(PointView p, PointView q, Metric metric) {
  check_same_dim(p.size(), q.size(), "power_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc = metric.accumulate(acc, metric.term(std::abs(p[i] - q[i])));
  return acc;
}

PartialDistance partial_power_distance(PointView p, PointView q, Metric metric, double threshold) {
  check_same_dim(p.size(), q.size(), "partial_power_distance");
  if (!(threshold >= 0.0)) throw UsageError("partial distance threshold must be >= 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc = metric.accumulate(acc, metric.term(std::abs(p[i] - q[i])));
    if (acc >= threshold) return {std::nullopt, i + 1};
  }
  return {acc, p.size()};
}

double rect_power_distance(PointView q, const Rect& r, Metric metric) {
  check_same_dim(q.size(), r.dim(), "rect_power_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double gap = 0.0;
    if (q[i] < r.lo[i])
      gap = r.lo[i] - q[i];
    else if (q[i] > r.hi[i])
      gap = q[i] - r.hi[i];
    acc = metric.accumulate(acc, metric.term(gap));
  }
  return acc;
}

ChildDistances child_power_distance(double parent_dist, PointView q, std::size_t axis, double cut,
                                    double cell_lo, double cell_hi, Metric metric) {
  if (axis >= q.size()) throw UsageError("child_power_distance: axis out of range");
  if (!(cell_lo <= cut && cut <= cell_hi))
    throw UsageError("child_power_distance: cut outside the cell extent");
  return detail::child_distances(parent_dist, q[axis], cut, cell_lo, cell_hi, metric);
}

}  // namespace kdann
