#include "kdann/search.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>

#include "kdann/errors.hpp"

namespace kdann {

const char* to_string(Traversal t) { return t == Traversal::priority ? "priority" : "recursive"; }

Traversal parse_traversal(std::string_view text) {
  if (text == "priority") return Traversal::priority;
  if (text == "recursive") return Traversal::recursive;
  throw UsageError("unknown traversal '" + std::string(text) + "' (expected priority or recursive)");
}

QueryStats& QueryStats::operator+=(const QueryStats& o) {
  nodes_visited += o.nodes_visited;
  leaves_visited += o.leaves_visited;
  distance_calculations += o.distance_calculations;
  coordinate_accesses += o.coordinate_accesses;
  heap_operations += o.heap_operations;
  flops += o.flops;
  return *this;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bounded max-heap of the k best (power distance, index) pairs seen so far.
class KBest {
 public:
  explicit KBest(std::size_t k) : heap_(k, {kInf, std::numeric_limits<Index>::max()}) {}

  double worst() const { return heap_.front().first; }

  void insert(double dist, Index idx) {
    std::pop_heap(heap_.begin(), heap_.end());
    heap_.back() = {dist, idx};
    std::push_heap(heap_.begin(), heap_.end());
  }

  std::vector<Neighbor> sorted(Metric metric) && {
    std::sort(heap_.begin(), heap_.end());
    std::vector<Neighbor> out;
    out.reserve(heap_.size());
    for (auto [dist, idx] : heap_) out.push_back({idx, dist, metric.root(dist)});
    return out;
  }

 private:
  std::vector<std::pair<double, Index>> heap_;
};

class Searcher {
 public:
  Searcher(const KdTree& tree, const SearchRequest& req, SearchTrace* trace)
      : tree_(tree), query_(req.query), metric_(tree.metric()), best_(req.k), trace_(trace) {
    check_same_dim(req.query.size(), tree.dim(), "search query");
    if (req.k < 1 || req.k > tree.size())
      throw UsageError("search: k must be in [1, " + std::to_string(tree.size()) + "], got " +
                       std::to_string(req.k));
    if (!(req.epsilon >= 0.0) || !std::isfinite(req.epsilon))
      throw UsageError("search: epsilon must be finite and >= 0");
    for (double c : req.query)
      if (!std::isfinite(c)) throw UsageError("search: query coordinates must be finite");
    scale_ = metric_.power(1.0 + req.epsilon);
  }

  SearchResult recursive() {
    visit(KdTree::root(), rect_power_distance(query_, tree_.bounding_rect(), metric_));
    return finish();
  }

  SearchResult priority() {
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pending;
    pending.push({rect_power_distance(query_, tree_.bounding_rect(), metric_), KdTree::root()});
    ++stats_.heap_operations;
    while (!pending.empty()) {
      auto [dist, id] = pending.top();
      pending.pop();
      ++stats_.heap_operations;
      if (dist * scale_ >= best_.worst()) break;
      // Descend along the query side; the near child keeps the parent's distance.
      while (!tree_.node(id).is_leaf()) {
        record(id, dist, false);
        const Node& n = tree_.node(id);
        const ChildDistances cd = descend(n, dist);
        const NodeId near = cd.query_on_low_side ? KdTree::low_child(id) : n.high;
        const NodeId far = cd.query_on_low_side ? n.high : KdTree::low_child(id);
        if (cd.far_dist * scale_ < best_.worst()) {
          pending.push({cd.far_dist, far});
          ++stats_.heap_operations;
        }
        id = near;
      }
      record(id, dist, true);
      scan_leaf(tree_.node(id));
    }
    return finish();
  }

 private:
  void record(NodeId id, double dist, bool leaf) {
    ++stats_.nodes_visited;
    if (leaf) ++stats_.leaves_visited;
    if (trace_) trace_->visits.push_back({id, dist, leaf});
  }

  ChildDistances descend(const Node& n, double dist) {
    const auto axis = static_cast<std::size_t>(n.axis);
    stats_.flops += 4;
    return detail::child_distances(dist, query_[axis], n.cut, n.cell_lo, n.cell_hi, metric_);
  }

  void visit(NodeId id, double dist) {
    const Node& n = tree_.node(id);
    if (n.is_leaf()) {
      record(id, dist, true);
      scan_leaf(n);
      return;
    }
    record(id, dist, false);
    const ChildDistances cd = descend(n, dist);
    const NodeId low = KdTree::low_child(id);
    visit(cd.query_on_low_side ? low : n.high, cd.near_dist);
    if (cd.far_dist * scale_ < best_.worst()) visit(cd.query_on_low_side ? n.high : low, cd.far_dist);
  }

  void scan_leaf(const Node& leaf) {
    const PointSet& pts = tree_.points();
    const std::size_t d = pts.dim();
    for (Index idx : tree_.bucket(leaf)) {
      const double threshold = best_.worst();
      const PointView p = pts[idx];
      double acc = 0.0;
      std::size_t read = 0;
      bool exceeded = false;
      while (read < d) {
        acc = metric_.accumulate(acc, metric_.term(std::abs(p[read] - query_[read])));
        ++read;
        if (acc >= threshold) {
          exceeded = true;
          break;
        }
      }
      ++stats_.distance_calculations;
      stats_.coordinate_accesses += read;
      stats_.flops += 3 * read;
      if (!exceeded) {
        best_.insert(acc, idx);
        ++stats_.heap_operations;
      }
    }
  }

  SearchResult finish() { return {std::move(best_).sorted(metric_), stats_}; }

  const KdTree& tree_;
  PointView query_;
  Metric metric_;
  double scale_ = 1.0;
  KBest best_;
  QueryStats stats_;
  SearchTrace* trace_;
};

}  // namespace

SearchResult search_recursive(const KdTree& tree, const SearchRequest& request, SearchTrace* trace) {
  return Searcher(tree, request, trace).recursive();
}

SearchResult search_priority(const KdTree& tree, const SearchRequest& request, SearchTrace* trace) {
  return Searcher(tree, request, trace).priority();
}

SearchResult search(const KdTree& tree, const SearchRequest& request, SearchTrace* trace) {
  return request.traversal == Traversal::priority ? search_priority(tree, request, trace)
                                                  : search_recursive(tree, request, trace);
}

}  // namespace kdann
