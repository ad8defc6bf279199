#pragma once

#include <cstdint>
#include <vector>

#include "kdann/geometry.hpp"
#include "kdann/kdtree.hpp"

namespace kdann {

enum class Traversal { recursive, priority };

const char* to_string(Traversal t);
Traversal parse_traversal(std::string_view text);

struct SearchRequest {
  PointView query;
  std::size_t k = 1;
  double epsilon = 0.0;
  Traversal traversal = Traversal::priority;
};

struct Neighbor {
  Index point_index = 0;
  double power_dist = 0.0;
  double dist = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Machine-independent work counters for one or more queries.
///
/// FLOP convention: 3 per coordinate read in a point distance (difference,
/// power, accumulate) and 4 per incremental child-distance update
/// (difference, power, subtract, add).
struct QueryStats {
  std::uint64_t nodes_visited = 0;
  std::uint64_t leaves_visited = 0;
  std::uint64_t distance_calculations = 0;
  std::uint64_t coordinate_accesses = 0;
  std::uint64_t heap_operations = 0;
  std::uint64_t flops = 0;

  QueryStats& operator+=(const QueryStats& o);
  friend bool operator==(const QueryStats&, const QueryStats&) = default;
};

/// Every node a search entered, in order, with the cell power distance the
/// search held for it at that moment.
struct NodeVisit {
  NodeId node;
  double cell_dist;
  bool leaf;
};

struct SearchTrace {
  std::vector<NodeVisit> visits;
};

struct SearchResult {
  std::vector<Neighbor> neighbors;  // sorted by (dist, point_index), exactly k
  QueryStats stats;
};

/// Depth-first search: near child first, far child only if its cell distance
/// times (1+eps) is below the current k-th best.
SearchResult search_recursive(const KdTree& tree, const SearchRequest& request,
                              SearchTrace* trace = nullptr);

/// Best-first search over a min-heap of subtrees keyed by cell distance; stops
/// once the closest pending cell times (1+eps) reaches the k-th best.
SearchResult search_priority(const KdTree& tree, const SearchRequest& request,
                             SearchTrace* trace = nullptr);

/// Dispatches on request.traversal.
SearchResult search(const KdTree& tree, const SearchRequest& request,
                    SearchTrace* trace = nullptr);

}  // namespace kdann
