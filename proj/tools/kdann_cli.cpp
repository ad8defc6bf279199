// Command-line front end: experiment runs, point generation, tree building
// and ad-hoc queries.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kdann/bench_stats.hpp"
#include "kdann/distributions.hpp"
#include "kdann/errors.hpp"
#include "kdann/experiment.hpp"
#include "kdann/kdtree.hpp"
#include "kdann/search.hpp"
#include "kdann/splitters.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;

void print_summary(const kdann::RunReport& report, std::ostream& out) {
  out << "splitter           eps    sigma_thin  runs  nodes_visited  avg_err    max_err(mean)\n";
  for (const auto& row : kdann::summarize(report)) {
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %-6g %-11g %-5zu %-14.6g %-10.4g %.4g\n",
                  row.splitter.c_str(), row.epsilon, row.sigma_thin, row.runs,
                  row.nodes_visited_mean, row.avg_error, row.max_error_mean);
    out << line;
  }
}

// Structural guarantees each splitter promises; throws OracleViolation.
void check_structure(const kdann::RunRecord& rec, const kdann::KdTree& tree) {
  const auto& s = rec.tree;
  const std::string where = rec.splitter + " seed=" + std::to_string(rec.seed) + ": ";
  if (rec.splitter == "sliding-midpoint" || rec.splitter == "min-ambiguity" ||
      rec.splitter == "standard") {
    if (s.trivial_split_count != 0 || s.empty_leaf_count != 0)
      throw kdann::OracleViolation(where + "trivial split or empty leaf");
  }
  if (rec.splitter == "sliding-midpoint" && s.node_count > 2 * tree.size() - 1)
    throw kdann::OracleViolation(where + "more than 2n-1 nodes");
  if (s.undersized_split_count != 0)
    throw kdann::OracleViolation(where + "split a node holding <= bucket_size points");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kd-tree nearest-neighbor experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  auto* run = app.add_subcommand("run", "Run an experiment config and write the CSV report");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "CSV path (default: config 'output', else stdout)");

  auto* verify = app.add_subcommand("verify", "Run a config with oracle and structural checks");
  verify->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  std::string spec_path;
  std::size_t gen_n = 1000;
  std::size_t gen_d = 2;
  std::uint64_t gen_seed = 0;
  bool seed_given = false;
  auto* gen = app.add_subcommand("gen", "Generate a point set as CSV");
  gen->add_option("spec", spec_path, "Distribution spec (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("-n", gen_n, "Number of points")->required();
  gen->add_option("-d", gen_d, "Dimension")->required();
  gen->add_option("-o,--output", output, "Output CSV")->required();
  auto* seed_opt = gen->add_option("--seed", gen_seed, "Override the spec's seed");

  std::string points_path;
  std::string splitter_name = "sliding-midpoint";
  std::size_t bucket = 1;
  std::string metric_text = "2";
  std::string training_path;
  double epsilon = 0.0;
  auto* build_cmd = app.add_subcommand("build", "Build a tree from a points CSV and save it");
  build_cmd->add_option("points", points_path, "Points CSV")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("-s,--splitter", splitter_name, "standard|midpoint|sliding-midpoint|min-ambiguity");
  build_cmd->add_option("-b,--bucket", bucket, "Bucket size");
  build_cmd->add_option("-m,--metric", metric_text, "Metric order or 'inf'");
  build_cmd->add_option("--training", training_path, "Training points CSV (min-ambiguity)");
  build_cmd->add_option("-e,--epsilon", epsilon, "Error bound used for training balls");
  build_cmd->add_option("-o,--output", output, "Tree file")->required();

  std::string tree_path;
  std::size_t k = 1;
  std::string traversal_text = "priority";
  auto* query = app.add_subcommand("query", "Answer queries against a saved tree");
  query->add_option("tree", tree_path, "Tree file")->required()->check(CLI::ExistingFile);
  query->add_option("points", points_path, "Query points CSV")->required()->check(CLI::ExistingFile);
  query->add_option("-k", k, "Neighbors per query");
  query->add_option("-e,--epsilon", epsilon, "Allowed relative error");
  query->add_option("-t,--traversal", traversal_text, "priority|recursive");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0, anything else is a usage error
    return app.exit(e) == 0 ? 0 : 1;
  }
  seed_given = seed_opt->count() > 0;

  try {
    if (run->parsed() || verify->parsed()) {
      kdann::ExperimentConfig config = kdann::load_config(config_path);
      kdann::RunObserver observer;
      if (verify->parsed()) {
        config.cross_check_traversals = true;
        observer.tree_built = check_structure;
      }
      const kdann::RunReport report = kdann::run_experiment(config, observer);
      if (verify->parsed()) {
        std::cout << "verify: " << report.records.size()
                  << " runs; every answer within its (1+eps) bound, exact at eps=0, "
                     "both traversals; structural checks passed\n";
        return 0;
      }
      const std::string path = output.empty() ? config.output : output;
      if (path.empty()) {
        kdann::emit_report(report, std::cout);
      } else {
        kdann::emit_report(report, path);
        std::cerr << "wrote " << report.records.size() << " rows to " << path << '\n';
      }
      print_summary(report, std::cerr);
    } else if (gen->parsed()) {
      std::ifstream in(spec_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::parse_error& e) {
        throw kdann::ConfigError(spec_path + ": " + e.what());
      }
      kdann::DistributionSpec spec = kdann::parse_distribution_spec(j, "spec");
      if (seed_given) spec.seed = gen_seed;
      try {
        spec.validate(gen_d);
      } catch (const kdann::UsageError& e) {
        throw kdann::ConfigError(std::string("spec: ") + e.what());
      }
      const auto set = kdann::generate(spec, gen_n, gen_d);
      kdann::write_points_csv(output, set.points);
    } else if (build_cmd->parsed()) {
      kdann::PointSet points = kdann::read_points_csv(points_path);
      const auto splitter = kdann::make_splitter(splitter_name);
      kdann::SplitterContext ctx;
      ctx.metric = kdann::Metric::parse(metric_text);
      ctx.epsilon = epsilon;
      std::vector<kdann::TrainingBall> balls;
      if (!training_path.empty()) {
        balls = kdann::prepare_training(points, kdann::read_points_csv(training_path), epsilon, ctx.metric);
        ctx.training_balls = balls;
      }
      const kdann::KdTree tree = kdann::build(std::move(points), bucket, *splitter, ctx);
      std::ofstream out(output);
      if (!out) throw std::runtime_error("cannot open '" + output + "' for writing");
      tree.save(out);
      const auto stats = kdann::tree_stats(tree);
      std::cerr << "nodes " << stats.node_count << ", leaves " << stats.leaf_count << ", depth "
                << stats.depth << ", avg leaf aspect " << stats.avg_leaf_aspect_ratio << '\n';
    } else if (query->parsed()) {
      std::ifstream in(tree_path);
      const kdann::KdTree tree = kdann::KdTree::load(in);
      const kdann::PointSet queries = kdann::read_points_csv(points_path);
      const auto traversal = kdann::parse_traversal(traversal_text);
      std::cout << "query,rank,index,dist,nodes_visited\n";
      std::cout.precision(17);
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto r = kdann::search(tree, {queries[q], k, epsilon, traversal});
        for (std::size_t j = 0; j < r.neighbors.size(); ++j)
          std::cout << q << ',' << j << ',' << r.neighbors[j].point_index << ','
                    << r.neighbors[j].dist << ',' << r.stats.nodes_visited << '\n';
      }
    }
  } catch (const kdann::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const kdann::OracleViolation& e) {
    std::cerr << "oracle violation: " << e.what() << '\n';
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
