#include "kdann/distributions.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "kdann/errors.hpp"

namespace kdann {

std::string_view to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::uniform:
      return "uniform";
    case DistributionKind::clustered_gaussian:
      return "clustered-gaussian";
    case DistributionKind::clustered_ortho_ellipsoids:
      return "clustered-ortho-ellipsoids";
    case DistributionKind::clustered_ellipsoids:
      return "clustered-ellipsoids";
  }
  return "unknown";
}

DistributionKind parse_distribution_kind(std::string_view text) {
  for (auto kind : {DistributionKind::uniform, DistributionKind::clustered_gaussian,
                    DistributionKind::clustered_ortho_ellipsoids,
                    DistributionKind::clustered_ellipsoids})
    if (text == to_string(kind)) return kind;
  throw UsageError("unknown distribution '" + std::string(text) +
                   "' (expected uniform, clustered-gaussian, clustered-ortho-ellipsoids or "
                   "clustered-ellipsoids)");
}

void DistributionSpec::validate(std::size_t d) const {
  if (d < 1) throw UsageError("dimension must be >= 1");
  if (!clustered()) return;
  if (clusters < 1) throw UsageError("clusters must be >= 1");
  if (kind == DistributionKind::clustered_gaussian) {
    if (!(sigma > 0.0)) throw UsageError("sigma must be > 0");
    return;
  }
  if (d_max < 1 || d_max > d)
    throw UsageError("d_max must be in [1, " + std::to_string(d) + "], got " + std::to_string(d_max));
  if (!(sigma_lo > 0.0)) throw UsageError("sigma_lo must be > 0");
  if (!(sigma_lo <= sigma_hi)) throw UsageError("sigma_lo must not exceed sigma_hi");
  if (!(sigma_thin > 0.0)) throw UsageError("sigma_thin must be > 0");
}

ClusterModel make_cluster_model(const DistributionSpec& spec, std::size_t d, Rng& rng) {
  spec.validate(d);
  ClusterModel model;
  if (!spec.clustered()) return model;
  model.clusters.resize(spec.clusters);
  for (Cluster& c : model.clusters) {
    c.center.resize(d);
    for (double& x : c.center) x = rng.uniform(-1.0, 1.0);
  }
  if (spec.kind == DistributionKind::clustered_gaussian) {
    for (Cluster& c : model.clusters) c.stddev.assign(d, spec.sigma);
    return model;
  }

  std::vector<std::size_t> axes(d);
  for (Cluster& c : model.clusters) {
    const std::size_t fat_count = 1 + rng.index(spec.d_max);
    std::iota(axes.begin(), axes.end(), std::size_t{0});
    c.stddev.assign(d, spec.sigma_thin);
    c.fat.assign(d, false);
    for (std::size_t i = 0; i < fat_count; ++i) {
      std::swap(axes[i], axes[i + rng.index(d - i)]);
      c.fat[axes[i]] = true;
      c.stddev[axes[i]] = rng.uniform(spec.sigma_lo, spec.sigma_hi);
    }
  }
  if (spec.kind == DistributionKind::clustered_ellipsoids && d >= 2) {
    for (Cluster& c : model.clusters) {
      c.rotations.resize(d);
      for (Rotation& r : c.rotations) {
        r.axis_i = rng.index(d);
        r.axis_j = rng.index(d - 1);
        if (r.axis_j >= r.axis_i) ++r.axis_j;
        r.angle = rng.uniform(0.0, std::numbers::pi / 2);
      }
    }
  }
  return model;
}

void rotate_about_center(std::span<double> point, std::span<const double> center,
                         std::span<const Rotation> rotations) {
  check_same_dim(point.size(), center.size(), "rotate_about_center");
  for (const Rotation& r : rotations) {
    if (r.axis_i == r.axis_j || r.axis_i >= point.size() || r.axis_j >= point.size())
      throw UsageError("rotation axes must be distinct and in range");
    const double c = std::cos(r.angle);
    const double s = std::sin(r.angle);
    const double xi = point[r.axis_i] - center[r.axis_i];
    const double xj = point[r.axis_j] - center[r.axis_j];
    point[r.axis_i] = center[r.axis_i] + c * xi - s * xj;
    point[r.axis_j] = center[r.axis_j] + s * xi + c * xj;
  }
}

PointSet apply_cluster_rotations(const PointSet& points, const Cluster& cluster) {
  PointSet out = points;
  for (std::size_t i = 0; i < out.size(); ++i)
    rotate_about_center(out.mutable_point(i), cluster.center, cluster.rotations);
  return out;
}

GeneratedSet sample_points(const DistributionSpec& spec, const ClusterModel& model,
                           std::size_t n, std::size_t d, Rng& rng) {
  spec.validate(d);
  if (n < 1) throw UsageError("point count must be >= 1");
  GeneratedSet set{PointSet(d), model, std::vector<Index>(n, 0)};
  std::vector<double> coords(n * d);
  if (!spec.clustered()) {
    for (double& x : coords) x = rng.uniform(-1.0, 1.0);
    set.points = PointSet(d, std::move(coords));
    return set;
  }
  if (model.clusters.empty()) throw UsageError("clustered distribution needs a cluster model");
  std::vector<double> offset(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<Index>(rng.index(model.clusters.size()));
    const Cluster& c = model.clusters[label];
    check_same_dim(c.center.size(), d, "cluster model");
    set.labels[i] = label;
    std::span<double> p(coords.data() + i * d, d);
    for (std::size_t a = 0; a < d; ++a) p[a] = c.center[a] + c.stddev[a] * rng.gaussian();
    if (!c.rotations.empty()) rotate_about_center(p, c.center, c.rotations);
  }
  set.points = PointSet(d, std::move(coords));
  return set;
}

GeneratedSet generate(const DistributionSpec& spec, std::size_t n, std::size_t d) {
  Rng rng(spec.seed);
  ClusterModel model = make_cluster_model(spec, d, rng);
  return sample_points(spec, model, n, d, rng);
}

void write_points_csv(const std::filesystem::path& path, const PointSet& points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  std::array<char, 64> buf;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const PointView p = points[i];
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (a) out << ',';
      auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), p[a]);
      out.write(buf.data(), end - buf.data());
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("error writing '" + path.string() + "'");
}

PointSet read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  std::vector<double> coords;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t fields = 0;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (ptr < end && *ptr == ' ') ++ptr;
      double value = 0.0;
      auto [next, ec] = std::from_chars(ptr, end, value);
      if (ec != std::errc{})
        throw UsageError(path.string() + ":" + std::to_string(line_no) + ": not a number");
      coords.push_back(value);
      ++fields;
      ptr = next;
      while (ptr < end && *ptr == ' ') ++ptr;
      if (ptr == end) break;
      if (*ptr != ',')
        throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected ','");
      ++ptr;
    }
    if (dim == 0) dim = fields;
    if (fields != dim)
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " fields, got " + std::to_string(fields));
  }
  if (dim == 0) throw UsageError("'" + path.string() + "' contains no points");
  return PointSet(dim, std::move(coords));
}

}  // namespace kdann
