#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "kdann/geometry.hpp"
#include "kdann/splitters.hpp"

namespace kdann {

using NodeId = std::uint32_t;

/// One tree node, stored in preorder. An internal node's low child is the
/// next node in the array; `high` indexes its high child. A leaf owns the
/// index range [begin, end) of the tree's point permutation.
struct Node {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t axis = kLeaf;
  double cut = 0.0;
  double cell_lo = 0.0;  // parent cell extent along `axis`
  double cell_hi = 0.0;
  NodeId high = 0;
  Index begin = 0;
  Index end = 0;

  bool is_leaf() const { return axis == kLeaf; }
  std::size_t size() const { return end - begin; }
};

struct BuildOptions {
  /// Recursion cap; defaults to 10 * ceil(log2 n) + 50.
  std::optional<std::size_t> max_depth;
  /// Recheck every minimum-ambiguity score against the children's ball lists.
  bool verify_splits = false;
};

class KdTree {
 public:
  KdTree() = default;

  std::size_t dim() const { return points_.dim(); }
  std::size_t size() const { return points_.size(); }
  std::size_t bucket_size() const { return bucket_size_; }
  Metric metric() const { return metric_; }
  const PointSet& points() const { return points_; }
  const Rect& bounding_rect() const { return bounds_; }

  static constexpr NodeId root() { return 0; }
  std::span<const Node> nodes() const { return nodes_; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  static NodeId low_child(NodeId id) { return id + 1; }
  NodeId high_child(NodeId id) const { return nodes_[id].high; }
  std::span<const Index> bucket(const Node& leaf) const {
    return std::span<const Index>(indices_).subspan(leaf.begin, leaf.size());
  }

  /// Cell of every node, indexed by NodeId.
  std::vector<Rect> node_cells() const;

  /// Line-oriented text form: header, bounds, points, preorder node records.
  void save(std::ostream& out) const;
  static KdTree load(std::istream& in);

 private:
  friend class TreeBuilder;

  PointSet points_;
  Rect bounds_;
  std::vector<Index> indices_;
  std::vector<Node> nodes_;
  std::size_t bucket_size_ = 1;
  Metric metric_;
};

/// Recursively builds a tree over `points`. The root cell is the tight
/// bounding rectangle; a node becomes a leaf when it holds <= bucket_size
/// points, when all of its points coincide, or when the splitter reports
/// UNSPLITTABLE.
KdTree build(PointSet points, std::size_t bucket_size, const Splitter& splitter,
             const SplitterContext& context = {}, const BuildOptions& options = {});

struct TreeStats {
  std::size_t node_count = 0;
  std::size_t internal_count = 0;
  std::size_t leaf_count = 0;
  std::size_t empty_leaf_count = 0;
  std::size_t depth = 0;
  double avg_leaf_aspect_ratio = 0.0;
  std::size_t degenerate_leaf_count = 0;
  std::size_t max_leaf_size = 0;
  /// Internal nodes with an empty child.
  std::size_t trivial_split_count = 0;
  /// Internal nodes holding <= bucket_size points.
  std::size_t undersized_split_count = 0;
  /// Children with aspect ratio > 2, and how many of those have a sibling
  /// whose side along the child's shortest axis is at least half its own
  /// longest side.
  std::size_t skinny_cell_count = 0;
  std::size_t skinny_with_fat_sibling = 0;
};

TreeStats tree_stats(const KdTree& tree);

}  // namespace kdann
