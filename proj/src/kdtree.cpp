#include "kdann/kdtree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "kdann/errors.hpp"

namespace kdann {

namespace {

std::size_t ceil_log2(std::size_t n) { return n <= 1 ? 0 : std::bit_width(n - 1); }

}  // namespace

class TreeBuilder {
 public:
  TreeBuilder(PointSet points, std::size_t bucket_size, const Splitter& splitter,
              const SplitterContext& context, const BuildOptions& options)
      : splitter_(splitter), context_(context), options_(options) {
    if (points.empty()) throw UsageError("build: point set is empty");
    if (bucket_size < 1) throw UsageError("build: bucket size must be >= 1");
    if (points.size() > std::numeric_limits<Index>::max() / 2)
      throw UsageError("build: too many points");
    if (splitter.uses_training() && context.training_balls.empty())
      throw UsageError("build: splitter '" + std::string(splitter.name()) +
                       "' requires a nonempty training set");
    tree_.bucket_size_ = bucket_size;
    tree_.metric_ = context.metric;
    tree_.bounds_ = Rect::bounding(points);
    tree_.indices_.resize(points.size());
    std::iota(tree_.indices_.begin(), tree_.indices_.end(), Index{0});
    tree_.points_ = std::move(points);
    max_depth_ = options.max_depth.value_or(10 * ceil_log2(tree_.size()) + 50);
  }

  KdTree run() {
    Rect cell = tree_.bounds_;
    std::vector<BallRef> balls;
    if (splitter_.uses_training()) {
      const auto training = context_.training_balls;
      for (std::size_t b = 0; b < training.size(); ++b) {
        check_same_dim(training[b].center.size(), tree_.dim(), "training ball");
        const double dist = rect_power_distance(training[b].center, cell, context_.metric);
        if (dist <= training[b].power_radius) balls.push_back({static_cast<Index>(b), dist});
      }
    }
    build_node(cell, 0, static_cast<Index>(tree_.size()), balls, 0);
    return std::move(tree_);
  }

 private:
  bool all_coincident(std::span<const Index> subset) const {
    const PointSet& pts = tree_.points_;
    const PointView first = pts[subset.front()];
    for (Index i : subset.subspan(1))
      if (!std::equal(first.begin(), first.end(), pts[i].begin())) return false;
    return true;
  }

  NodeId make_leaf(Index begin, Index end) {
    Node leaf;
    leaf.begin = begin;
    leaf.end = end;
    tree_.nodes_.push_back(leaf);
    return static_cast<NodeId>(tree_.nodes_.size() - 1);
  }

  void validate(const SplitDecision& decision, const Rect& cell, std::span<const Index> subset) const {
    const std::string who = "splitter '" + std::string(splitter_.name()) + "': ";
    if (decision.axis >= tree_.dim()) throw ConstructionError(who + "axis out of range");
    const double lo = cell.lo[decision.axis];
    const double hi = cell.hi[decision.axis];
    if (!(lo <= decision.cut && decision.cut <= hi))
      throw ConstructionError(who + "cut " + std::to_string(decision.cut) + " outside cell [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
    if (decision.low_count > subset.size()) throw ConstructionError(who + "low count exceeds subset");
    if (splitter_.requires_nontrivial() &&
        (decision.low_count == 0 || decision.low_count == subset.size()))
      throw ConstructionError(who + "trivial partition");
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const double c = tree_.points_.coord(subset[i], decision.axis);
      if (i < decision.low_count ? c > decision.cut : c < decision.cut)
        throw ConstructionError(who + "point on the wrong side of the cut");
    }
  }

  void build_node(Rect& cell, Index begin, Index end, std::span<const BallRef> balls,
                  std::size_t depth) {
    if (depth > max_depth_)
      throw ConstructionError("build: depth exceeded cap of " + std::to_string(max_depth_));
    std::span<Index> subset(tree_.indices_.data() + begin, end - begin);
    if (subset.size() <= tree_.bucket_size_ || all_coincident(subset)) {
      make_leaf(begin, end);
      return;
    }
    const SplitDecision decision =
        splitter_.split(SplitInput{tree_.points_, cell, subset, balls, context_});
    if (!decision.is_split()) {
      make_leaf(begin, end);
      return;
    }
    validate(decision, cell, subset);

    const std::size_t axis = decision.axis;
    const NodeId id = static_cast<NodeId>(tree_.nodes_.size());
    {
      Node inner;
      inner.axis = static_cast<std::int32_t>(axis);
      inner.cut = decision.cut;
      inner.cell_lo = cell.lo[axis];
      inner.cell_hi = cell.hi[axis];
      inner.begin = begin;
      inner.end = end;
      tree_.nodes_.push_back(inner);
    }

    std::vector<BallRef> low_balls;
    std::vector<BallRef> high_balls;
    if (splitter_.uses_training()) {
      const auto training = context_.training_balls;
      for (const BallRef& ref : balls) {
        const TrainingBall& ball = training[ref.ball];
        const ChildDistances cd = detail::child_distances(
            ref.cell_dist, ball.center[axis], decision.cut, cell.lo[axis], cell.hi[axis],
            context_.metric);
        const double low_dist = cd.query_on_low_side ? cd.near_dist : cd.far_dist;
        const double high_dist = cd.query_on_low_side ? cd.far_dist : cd.near_dist;
        if (low_dist <= ball.power_radius) low_balls.push_back({ref.ball, low_dist});
        if (high_dist <= ball.power_radius) high_balls.push_back({ref.ball, high_dist});
      }
      if (options_.verify_splits && decision.score) {
        const auto low_n = static_cast<std::int64_t>(decision.low_count);
        const auto high_n = static_cast<std::int64_t>(subset.size() - decision.low_count);
        const std::int64_t edges = low_n * static_cast<std::int64_t>(low_balls.size()) +
                                   high_n * static_cast<std::int64_t>(high_balls.size());
        if (edges != *decision.score)
          throw ConstructionError("minimum-ambiguity score " + std::to_string(*decision.score) +
                                  " disagrees with child edge count " + std::to_string(edges));
      }
    }

    const Index mid = begin + static_cast<Index>(decision.low_count);
    const double saved_hi = cell.hi[axis];
    cell.hi[axis] = decision.cut;
    build_node(cell, begin, mid, low_balls, depth + 1);
    cell.hi[axis] = saved_hi;

    tree_.nodes_[id].high = static_cast<NodeId>(tree_.nodes_.size());
    const double saved_lo = cell.lo[axis];
    cell.lo[axis] = decision.cut;
    build_node(cell, mid, end, high_balls, depth + 1);
    cell.lo[axis] = saved_lo;
  }

  KdTree tree_;
  const Splitter& splitter_;
  const SplitterContext& context_;
  const BuildOptions& options_;
  std::size_t max_depth_ = 0;
};

KdTree build(PointSet points, std::size_t bucket_size, const Splitter& splitter,
             const SplitterContext& context, const BuildOptions& options) {
  return TreeBuilder(std::move(points), bucket_size, splitter, context, options).run();
}

std::vector<Rect> KdTree::node_cells() const {
  std::vector<Rect> cells(nodes_.size());
  if (nodes_.empty()) return cells;
  cells[root()] = bounds_;
  // Preorder: every parent precedes its children.
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.is_leaf()) continue;
    const auto axis = static_cast<std::size_t>(n.axis);
    cells[low_child(id)] = cells[id];
    cells[low_child(id)].hi[axis] = n.cut;
    cells[n.high] = cells[id];
    cells[n.high].lo[axis] = n.cut;
  }
  return cells;
}

TreeStats tree_stats(const KdTree& tree) {
  TreeStats stats;
  const auto nodes = tree.nodes();
  stats.node_count = nodes.size();
  if (nodes.empty()) return stats;
  const std::vector<Rect> cells = tree.node_cells();

  std::vector<std::size_t> depth(nodes.size(), 0);
  double aspect_sum = 0.0;
  std::size_t aspect_count = 0;
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& n = nodes[id];
    stats.depth = std::max(stats.depth, depth[id]);
    if (n.is_leaf()) {
      ++stats.leaf_count;
      if (n.size() == 0) ++stats.empty_leaf_count;
      stats.max_leaf_size = std::max(stats.max_leaf_size, n.size());
      const double aspect = cells[id].aspect_ratio();
      if (std::isinf(aspect)) {
        ++stats.degenerate_leaf_count;
      } else {
        aspect_sum += aspect;
        ++aspect_count;
      }
      continue;
    }
    ++stats.internal_count;
    const NodeId lo = KdTree::low_child(id);
    const NodeId hi = n.high;
    depth[lo] = depth[hi] = depth[id] + 1;
    if (nodes[lo].size() == 0 || nodes[hi].size() == 0) ++stats.trivial_split_count;
    if (n.size() <= tree.bucket_size()) ++stats.undersized_split_count;

    for (auto [child, sibling] : {std::pair{lo, hi}, std::pair{hi, lo}}) {
      const Rect& c = cells[child];
      const double aspect = c.aspect_ratio();
      if (std::isinf(aspect) || aspect <= 2.0) continue;
      ++stats.skinny_cell_count;
      std::size_t thin_axis = 0;
      for (std::size_t a = 1; a < c.dim(); ++a)
        if (c.side(a) < c.side(thin_axis)) thin_axis = a;
      const Rect& s = cells[sibling];
      double longest = 0.0;
      for (std::size_t a = 0; a < s.dim(); ++a) longest = std::max(longest, s.side(a));
      if (s.side(thin_axis) >= 0.5 * longest) ++stats.skinny_with_fat_sibling;
    }
  }
  stats.avg_leaf_aspect_ratio = aspect_count ? aspect_sum / static_cast<double>(aspect_count) : 0.0;
  return stats;
}

// Format:
//   kdtree <dim> <count> <bucket_size> <metric>
//   bounds <lo_0> .. <lo_d-1> <hi_0> .. <hi_d-1>
//   <count> lines of point coordinates
//   nodes <node_count>
//   I <axis> <cut> <cell_lo> <cell_hi>        (internal, preorder)
//   L <size> <index>...                        (leaf)
void KdTree::save(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "kdtree " << dim() << ' ' << size() << ' ' << bucket_size_ << ' ' << metric_.name() << '\n';
  out << "bounds";
  for (double v : bounds_.lo) out << ' ' << v;
  for (double v : bounds_.hi) out << ' ' << v;
  out << '\n';
  for (std::size_t i = 0; i < size(); ++i) {
    const PointView p = points_[i];
    for (std::size_t a = 0; a < p.size(); ++a) out << (a ? " " : "") << p[a];
    out << '\n';
  }
  out << "nodes " << nodes_.size() << '\n';
  for (const Node& n : nodes_) {
    if (n.is_leaf()) {
      out << "L " << n.size();
      for (Index i : bucket(n)) out << ' ' << i;
    } else {
      out << "I " << n.axis << ' ' << n.cut << ' ' << n.cell_lo << ' ' << n.cell_hi;
    }
    out << '\n';
  }
  out.precision(old_precision);
}

namespace {

template <typename T>
T read_value(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) throw UsageError(std::string("tree file: cannot read ") + what);
  return value;
}

void expect_token(std::istream& in, const std::string& token) {
  const auto got = read_value<std::string>(in, token.c_str());
  if (got != token) throw UsageError("tree file: expected '" + token + "', got '" + got + "'");
}

// Rebuilds begin/end ranges and high-child links from the preorder records.
NodeId link_nodes(std::vector<Node>& nodes, NodeId id, Index& cursor) {
  if (id >= nodes.size()) throw UsageError("tree file: truncated node list");
  Node& n = nodes[id];
  if (n.is_leaf()) {
    n.begin = cursor;
    cursor += n.end;  // end holds the leaf size until linked
    n.end = cursor;
    return id + 1;
  }
  n.begin = cursor;
  const NodeId after_low = link_nodes(nodes, id + 1, cursor);
  nodes[id].high = after_low;
  const NodeId after_high = link_nodes(nodes, after_low, cursor);
  nodes[id].end = cursor;
  return after_high;
}

}  // namespace

KdTree KdTree::load(std::istream& in) {
  KdTree tree;
  expect_token(in, "kdtree");
  const auto dim = read_value<std::size_t>(in, "dimension");
  const auto count = read_value<std::size_t>(in, "count");
  tree.bucket_size_ = read_value<std::size_t>(in, "bucket size");
  tree.metric_ = Metric::parse(read_value<std::string>(in, "metric"));
  if (dim == 0 || count == 0) throw UsageError("tree file: empty tree");

  expect_token(in, "bounds");
  std::vector<double> lo(dim), hi(dim);
  for (auto& v : lo) v = read_value<double>(in, "bounds");
  for (auto& v : hi) v = read_value<double>(in, "bounds");
  tree.bounds_ = Rect(std::move(lo), std::move(hi));

  std::vector<double> coords(dim * count);
  for (auto& v : coords) v = read_value<double>(in, "point coordinate");
  tree.points_ = PointSet(dim, std::move(coords));

  expect_token(in, "nodes");
  const auto node_count = read_value<std::size_t>(in, "node count");
  tree.nodes_.resize(node_count);
  for (Node& n : tree.nodes_) {
    const auto tag = read_value<std::string>(in, "node tag");
    if (tag == "L") {
      const auto size = read_value<std::size_t>(in, "leaf size");
      n.axis = Node::kLeaf;
      n.end = static_cast<Index>(size);
      for (std::size_t i = 0; i < size; ++i) {
        const auto idx = read_value<std::size_t>(in, "leaf index");
        if (idx >= count) throw UsageError("tree file: leaf index out of range");
        tree.indices_.push_back(static_cast<Index>(idx));
      }
    } else if (tag == "I") {
      n.axis = read_value<std::int32_t>(in, "axis");
      n.cut = read_value<double>(in, "cut");
      n.cell_lo = read_value<double>(in, "cell lo");
      n.cell_hi = read_value<double>(in, "cell hi");
      if (n.axis < 0 || static_cast<std::size_t>(n.axis) >= dim)
        throw UsageError("tree file: axis out of range");
    } else {
      throw UsageError("tree file: unknown node tag '" + tag + "'");
    }
  }
  if (tree.indices_.size() != count)
    throw UsageError("tree file: leaves must hold every point exactly once");
  Index cursor = 0;
  if (link_nodes(tree.nodes_, 0, cursor) != node_count || cursor != tree.indices_.size())
    throw UsageError("tree file: node records do not form a tree");
  return tree;
}

}  // namespace kdann
