#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kdann/bench_stats.hpp"
#include "kdann/distributions.hpp"
#include "kdann/kdtree.hpp"
#include "kdann/search.hpp"

#include <json.hpp>

namespace kdann {

/// Declarative description of one experiment sweep. Defaults mirror the
/// reference setup: 4000 points in dimension 20, 12000 queries, 36000
/// training points, 5 clusters, d_max 10, sigma_lo = sigma_hi = 0.3, L2,
/// bucket size 1.
struct ExperimentConfig {
  DistributionSpec data_spec{DistributionKind::clustered_ortho_ellipsoids};
  DistributionSpec query_spec{DistributionKind::clustered_ortho_ellipsoids};
  std::optional<DistributionSpec> training_spec;
  std::size_t n_data = 4000;
  std::size_t n_queries = 12000;
  std::size_t n_training = 36000;
  std::size_t d = 20;
  Metric metric = Metric::euclidean();
  std::size_t bucket_size = 1;
  std::vector<std::string> splitters{"standard", "sliding-midpoint", "min-ambiguity"};
  std::vector<double> epsilons{1.0, 2.0, 3.0};
  std::size_t k = 1;
  /// When nonempty, sigma_thin of every ellipsoid spec is replaced by each value.
  std::vector<double> sigma_thin_sweep;
  std::vector<std::uint64_t> seeds{1};
  bool share_cluster_model = true;
  Traversal traversal = Traversal::priority;
  /// Also run the other traversal on every query and check it against the oracle.
  bool cross_check_traversals = false;
  /// Record build times; off by default so reports are byte-reproducible.
  bool record_timing = false;
  std::string output;

  bool needs_training() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const DistributionSpec& spec);
DistributionSpec parse_distribution_spec(const nlohmann::json& j, const std::string& where);
/// FNV-1a over the canonical JSON form of the config (defaults filled in).
std::uint64_t config_hash(const ExperimentConfig& config);

/// One (splitter, epsilon, sigma_thin, seed) combination.
struct RunRecord {
  std::string splitter;
  std::size_t splitter_rank = 0;  // position in the config's splitter list
  double epsilon = 0.0;
  double sigma_thin = 0.0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t queries = 0;
  QueryStats totals;
  double nodes_visited_mean = 0.0;
  double leaves_visited_mean = 0.0;
  double dist_calcs_mean = 0.0;
  double coord_accesses_mean = 0.0;
  ErrorStats errors;
  TreeStats tree;
  double build_ms = 0.0;
  std::optional<std::uint64_t> total_overlap;
  std::uint64_t config_hash = 0;
};

struct RunReport {
  std::vector<RunRecord> records;
};

/// Callbacks for callers that want to inspect intermediate artifacts.
struct RunObserver {
  std::function<void(const RunRecord&, const KdTree&)> tree_built;
  /// Per-query stats of the configured traversal, indexed by query.
  std::function<void(const RunRecord&, const std::vector<QueryStats>&)> queries_done;
};

/// Runs every sweep point: generates data, query and training sets, builds
/// each requested tree, answers all queries and checks every answer against
/// the brute-force oracle. Throws OracleViolation on any unsound answer.
RunReport run_experiment(const ExperimentConfig& config, const RunObserver& observer = {});

/// Header-first CSV, reals with 6 significant digits.
void emit_report(const RunReport& report, std::ostream& out);
void emit_report(const RunReport& report, const std::filesystem::path& path);
std::string report_header();

/// Means over seeds for each (splitter, epsilon, sigma_thin).
struct SummaryRow {
  std::string splitter;
  double epsilon = 0.0;
  double sigma_thin = 0.0;
  std::size_t runs = 0;
  double nodes_visited_mean = 0.0;
  double avg_error = 0.0;
  double std_error = 0.0;
  double max_error_mean = 0.0;  // per-run maxima averaged over runs
};

std::vector<SummaryRow> summarize(const RunReport& report);

}  // namespace kdann
