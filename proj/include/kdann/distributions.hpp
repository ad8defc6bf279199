#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kdann/geometry.hpp"
#include "kdann/random.hpp"

namespace kdann {

enum class DistributionKind {
  uniform,
  clustered_gaussian,
  clustered_ortho_ellipsoids,
  clustered_ellipsoids,
};

/// "uniform" | "clustered-gaussian" | "clustered-ortho-ellipsoids" | "clustered-ellipsoids".
std::string_view to_string(DistributionKind kind);
DistributionKind parse_distribution_kind(std::string_view text);

struct DistributionSpec {
  DistributionKind kind = DistributionKind::uniform;
  std::size_t clusters = 5;
  double sigma = 0.3;  // clustered-gaussian
  std::size_t d_max = 10;
  double sigma_lo = 0.3;
  double sigma_hi = 0.3;
  double sigma_thin = 0.03;
  std::uint64_t seed = 0;

  bool clustered() const { return kind != DistributionKind::uniform; }
  /// Throws UsageError naming the offending parameter.
  void validate(std::size_t d) const;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

/// Givens rotation of the (axis_i, axis_j) plane by `angle` radians.
struct Rotation {
  std::size_t axis_i;
  std::size_t axis_j;
  double angle;
};

struct Cluster {
  std::vector<double> center;
  std::vector<double> stddev;       // per axis, before rotation
  std::vector<bool> fat;            // ellipsoid kinds only
  std::vector<Rotation> rotations;  // clustered-ellipsoids only, applied in order
};

struct ClusterModel {
  std::vector<Cluster> clusters;
};

/// Draws cluster centers, fat dimensions, fat deviations and rotations. The
/// draws do not depend on sigma_thin or sigma, so sweeping either with a
/// fixed seed keeps the same centers.
ClusterModel make_cluster_model(const DistributionSpec& spec, std::size_t d, Rng& rng);

struct GeneratedSet {
  PointSet points;
  ClusterModel model;
  std::vector<Index> labels;  // cluster of each point (0 for uniform)
};

/// Samples n points from `model` (ignored for uniform).
GeneratedSet sample_points(const DistributionSpec& spec, const ClusterModel& model,
                           std::size_t n, std::size_t d, Rng& rng);

/// Model and points from one stream seeded with spec.seed.
GeneratedSet generate(const DistributionSpec& spec, std::size_t n, std::size_t d);

/// Rotates one point about `center` by the rotations in order.
void rotate_about_center(std::span<double> point, std::span<const double> center,
                         std::span<const Rotation> rotations);

/// Rotates every point of `points` about the cluster's center.
PointSet apply_cluster_rotations(const PointSet& points, const Cluster& cluster);

/// One point per row, comma-separated, shortest round-trip decimal.
void write_points_csv(const std::filesystem::path& path, const PointSet& points);
PointSet read_points_csv(const std::filesystem::path& path);

}  // namespace kdann
