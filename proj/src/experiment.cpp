#include "kdann/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "kdann/errors.hpp"
#include "kdann/parallel.hpp"
#include "kdann/random.hpp"

namespace kdann {

using nlohmann::json;

namespace {

const std::set<std::string> kConfigKeys = {
    "n_data",  "n_queries", "n_training",       "d",        "metric",
    "bucket_size", "splitters", "epsilons",     "k",        "sigma_thin_sweep",
    "seeds",   "share_cluster_model", "traversal", "cross_check_traversals",
    "record_timing", "output", "data",          "queries",  "training"};

const std::set<std::string> kSpecKeys = {"kind",     "clusters", "sigma",      "d_max",
                                         "sigma_lo", "sigma_hi", "sigma_thin", "seed"};

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + "." + key + ": unknown key");
}

template <typename T>
T convert(const json& v, const std::string& field) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(field + ": expected true or false");
    return v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(field + ": expected a string");
    return v.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(field + ": expected a number");
    return v.get<T>();
  } else {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError(field + ": expected a nonnegative integer");
    return v.get<T>();
  }
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  return convert<T>(j.at(key), where.empty() ? key : where + "." + key);
}

template <typename T>
std::vector<T> get_list(const json& j, const std::string& key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(key + ": expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(convert<T>(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

bool same_distribution(DistributionSpec a, DistributionSpec b) {
  a.seed = b.seed = 0;
  return a == b;
}

DistributionSpec with_sigma_thin(DistributionSpec spec, std::optional<double> sigma_thin) {
  if (sigma_thin && (spec.kind == DistributionKind::clustered_ortho_ellipsoids ||
                     spec.kind == DistributionKind::clustered_ellipsoids))
    spec.sigma_thin = *sigma_thin;
  return spec;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

bool ExperimentConfig::needs_training() const {
  return training_spec.has_value() ||
         std::find(splitters.begin(), splitters.end(), "min-ambiguity") != splitters.end();
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(d >= 1, "d: must be >= 1");
  require(n_data >= 1, "n_data: must be >= 1");
  require(n_queries >= 1, "n_queries: must be >= 1");
  require(bucket_size >= 1, "bucket_size: must be >= 1");
  require(k >= 1 && k <= n_data, "k: must be in [1, n_data]");
  require(!splitters.empty(), "splitters: must list at least one splitter");
  for (std::size_t i = 0; i < splitters.size(); ++i) {
    try {
      make_splitter(splitters[i]);
    } catch (const UsageError& e) {
      throw ConfigError("splitters[" + std::to_string(i) + "]: " + e.what());
    }
  }
  require(!epsilons.empty(), "epsilons: must list at least one value");
  for (std::size_t i = 0; i < epsilons.size(); ++i)
    require(std::isfinite(epsilons[i]) && epsilons[i] >= 0.0,
            "epsilons[" + std::to_string(i) + "]: must be finite and >= 0");
  for (std::size_t i = 0; i < sigma_thin_sweep.size(); ++i)
    require(sigma_thin_sweep[i] > 0.0, "sigma_thin_sweep[" + std::to_string(i) + "]: must be > 0");
  require(!seeds.empty(), "seeds: must list at least one seed");

  auto check_spec = [&](const DistributionSpec& spec, const std::string& where) {
    for (std::optional<double> s : sigma_thin_sweep.empty()
                                       ? std::vector<std::optional<double>>{std::nullopt}
                                       : std::vector<std::optional<double>>(sigma_thin_sweep.begin(),
                                                                            sigma_thin_sweep.end())) {
      try {
        with_sigma_thin(spec, s).validate(d);
      } catch (const UsageError& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
  };
  check_spec(data_spec, "data");
  check_spec(query_spec, "queries");
  if (training_spec) {
    check_spec(*training_spec, "training");
    require(same_distribution(*training_spec, query_spec),
            "training: must describe the same distribution as queries");
  }
  if (needs_training()) require(n_training >= 1, "n_training: must be >= 1");
}

DistributionSpec parse_distribution_spec(const json& j, const std::string& where) {
  reject_unknown(j, kSpecKeys, where);
  DistributionSpec s;
  if (!j.contains("kind")) throw ConfigError(where + ".kind: missing");
  try {
    s.kind = parse_distribution_kind(get_field<std::string>(j, "kind", where, ""));
  } catch (const UsageError& e) {
    throw ConfigError(where + ".kind: " + e.what());
  }
  s.clusters = get_field<std::size_t>(j, "clusters", where, s.clusters);
  s.sigma = get_field<double>(j, "sigma", where, s.sigma);
  s.d_max = get_field<std::size_t>(j, "d_max", where, s.d_max);
  s.sigma_lo = get_field<double>(j, "sigma_lo", where, s.sigma_lo);
  s.sigma_hi = get_field<double>(j, "sigma_hi", where, s.sigma_hi);
  s.sigma_thin = get_field<double>(j, "sigma_thin", where, s.sigma_thin);
  s.seed = get_field<std::uint64_t>(j, "seed", where, s.seed);
  return s;
}

json to_json(const DistributionSpec& s) {
  return {{"kind", std::string(to_string(s.kind))},
          {"clusters", s.clusters},
          {"sigma", s.sigma},
          {"d_max", s.d_max},
          {"sigma_lo", s.sigma_lo},
          {"sigma_hi", s.sigma_hi},
          {"sigma_thin", s.sigma_thin},
          {"seed", s.seed}};
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, kConfigKeys, "config");
  ExperimentConfig c;
  c.n_data = get_field<std::size_t>(j, "n_data", "", c.n_data);
  c.n_queries = get_field<std::size_t>(j, "n_queries", "", c.n_queries);
  c.n_training = get_field<std::size_t>(j, "n_training", "", c.n_training);
  c.d = get_field<std::size_t>(j, "d", "", c.d);
  if (j.contains("metric")) {
    const json& m = j.at("metric");
    try {
      c.metric = m.is_string() ? Metric::parse(m.get<std::string>())
                               : Metric::minkowski(m.is_number_integer() ? m.get<int>() : 0);
    } catch (const UsageError& e) {
      throw ConfigError(std::string("metric: ") + e.what());
    }
  }
  c.bucket_size = get_field<std::size_t>(j, "bucket_size", "", c.bucket_size);
  c.splitters = get_list<std::string>(j, "splitters", c.splitters);
  c.epsilons = get_list<double>(j, "epsilons", c.epsilons);
  c.k = get_field<std::size_t>(j, "k", "", c.k);
  c.sigma_thin_sweep = get_list<double>(j, "sigma_thin_sweep", c.sigma_thin_sweep);
  c.seeds = get_list<std::uint64_t>(j, "seeds", c.seeds);
  c.share_cluster_model = get_field<bool>(j, "share_cluster_model", "", c.share_cluster_model);
  try {
    c.traversal = parse_traversal(get_field<std::string>(j, "traversal", "", to_string(c.traversal)));
  } catch (const UsageError& e) {
    throw ConfigError(std::string("traversal: ") + e.what());
  }
  c.cross_check_traversals = get_field<bool>(j, "cross_check_traversals", "", c.cross_check_traversals);
  c.record_timing = get_field<bool>(j, "record_timing", "", c.record_timing);
  c.output = get_field<std::string>(j, "output", "", c.output);
  if (j.contains("data")) c.data_spec = parse_distribution_spec(j.at("data"), "data");
  if (j.contains("queries")) c.query_spec = parse_distribution_spec(j.at("queries"), "queries");
  if (j.contains("training")) c.training_spec = parse_distribution_spec(j.at("training"), "training");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j = {{"n_data", c.n_data},
            {"n_queries", c.n_queries},
            {"n_training", c.n_training},
            {"d", c.d},
            {"metric", c.metric.name()},
            {"bucket_size", c.bucket_size},
            {"splitters", c.splitters},
            {"epsilons", c.epsilons},
            {"k", c.k},
            {"sigma_thin_sweep", c.sigma_thin_sweep},
            {"seeds", c.seeds},
            {"share_cluster_model", c.share_cluster_model},
            {"traversal", to_string(c.traversal)},
            {"cross_check_traversals", c.cross_check_traversals},
            {"record_timing", c.record_timing},
            {"data", to_json(c.data_spec)},
            {"queries", to_json(c.query_spec)}};
  if (c.training_spec) j["training"] = to_json(*c.training_spec);
  return j;
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a(to_json(config).dump()); }

namespace {

struct SweepPoint {
  std::uint64_t seed;
  std::optional<double> sigma_thin;
};

struct Workload {
  PointSet data;
  PointSet queries;
  std::optional<PointSet> training;
  std::vector<double> truth;  // k true distances per query
};

Workload make_workload(const ExperimentConfig& c, const SweepPoint& sp) {
  const DistributionSpec data_spec = with_sigma_thin(c.data_spec, sp.sigma_thin);
  const DistributionSpec query_spec = with_sigma_thin(c.query_spec, sp.sigma_thin);

  Rng data_rng(mix_seed(3 * sp.seed));
  Rng query_rng(mix_seed(3 * sp.seed + 1));
  Rng training_rng(mix_seed(3 * sp.seed + 2));

  Workload w;
  const ClusterModel data_model = make_cluster_model(data_spec, c.d, data_rng);
  w.data = sample_points(data_spec, data_model, c.n_data, c.d, data_rng).points;

  const bool shared = c.share_cluster_model && same_distribution(data_spec, query_spec);
  const ClusterModel query_model =
      shared ? data_model : make_cluster_model(query_spec, c.d, query_rng);
  w.queries = sample_points(query_spec, query_model, c.n_queries, c.d, query_rng).points;
  if (c.needs_training())
    w.training = sample_points(query_spec, query_model, c.n_training, c.d, training_rng).points;

  w.truth.resize(c.n_queries * c.k);
  parallel_for(c.n_queries, [&](std::size_t q) {
    const auto nn = brute_force_nn(w.data, w.queries[q], c.k, c.metric);
    for (std::size_t j = 0; j < c.k; ++j) w.truth[q * c.k + j] = nn[j].dist;
  });
  return w;
}

void run_queries(const ExperimentConfig& c, const KdTree& tree, const Workload& w, double epsilon,
                 RunRecord& rec, const RunObserver& observer) {
  std::vector<double> reported(c.n_queries * c.k);
  std::vector<double> other(c.cross_check_traversals ? reported.size() : 0);
  std::vector<QueryStats> per_query(c.n_queries);
  const Traversal alt = c.traversal == Traversal::priority ? Traversal::recursive : Traversal::priority;
  parallel_for(c.n_queries, [&](std::size_t q) {
    const SearchResult r = search(tree, {w.queries[q], c.k, epsilon, c.traversal});
    per_query[q] = r.stats;
    for (std::size_t j = 0; j < c.k; ++j) reported[q * c.k + j] = r.neighbors[j].dist;
    if (c.cross_check_traversals) {
      const SearchResult r2 = search(tree, {w.queries[q], c.k, epsilon, alt});
      for (std::size_t j = 0; j < c.k; ++j) other[q * c.k + j] = r2.neighbors[j].dist;
    }
  });
  const std::string where = rec.splitter + " eps=" + format_real(epsilon) +
                            " seed=" + std::to_string(rec.seed) + ": ";
  try {
    check_approximation(reported, w.truth, epsilon);
    if (c.cross_check_traversals) check_approximation(other, w.truth, epsilon);
    rec.errors = error_stats(reported, w.truth);
  } catch (const OracleViolation& e) {
    throw OracleViolation(where + e.what());
  }

  for (const QueryStats& s : per_query) rec.totals += s;
  const auto nq = static_cast<double>(c.n_queries);
  rec.queries = c.n_queries;
  rec.nodes_visited_mean = static_cast<double>(rec.totals.nodes_visited) / nq;
  rec.leaves_visited_mean = static_cast<double>(rec.totals.leaves_visited) / nq;
  rec.dist_calcs_mean = static_cast<double>(rec.totals.distance_calculations) / nq;
  rec.coord_accesses_mean = static_cast<double>(rec.totals.coordinate_accesses) / nq;
  if (observer.queries_done) observer.queries_done(rec, per_query);
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& c, const RunObserver& observer) {
  c.validate();
  const std::uint64_t hash = config_hash(c);
  RunReport report;

  std::vector<SweepPoint> sweep;
  for (std::uint64_t seed : c.seeds) {
    if (c.sigma_thin_sweep.empty()) sweep.push_back({seed, std::nullopt});
    for (double s : c.sigma_thin_sweep) sweep.push_back({seed, s});
  }

  for (const SweepPoint& sp : sweep) {
    const Workload w = make_workload(c, sp);

    std::map<double, std::vector<TrainingBall>> balls_by_eps;
    if (w.training)
      for (double eps : c.epsilons)
        balls_by_eps.emplace(eps, prepare_training(w.data, *w.training, eps, c.metric));

    for (std::size_t rank = 0; rank < c.splitters.size(); ++rank) {
      const std::string& name = c.splitters[rank];
      const auto splitter = make_splitter(name);
      std::optional<KdTree> shared_tree;
      double shared_build_ms = 0.0;

      auto timed_build = [&](const SplitterContext& ctx, double& ms) {
        const auto start = std::chrono::steady_clock::now();
        KdTree tree = build(w.data, c.bucket_size, *splitter, ctx);
        const auto stop = std::chrono::steady_clock::now();
        ms = c.record_timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;
        return tree;
      };

      for (double eps : c.epsilons) {
        RunRecord rec;
        rec.splitter = name;
        rec.splitter_rank = rank;
        rec.epsilon = eps;
        rec.sigma_thin = with_sigma_thin(c.data_spec, sp.sigma_thin).sigma_thin;
        rec.seed = sp.seed;
        rec.n = c.n_data;
        rec.d = c.d;
        rec.config_hash = hash;

        SplitterContext ctx;
        ctx.metric = c.metric;
        ctx.epsilon = eps;
        const std::vector<TrainingBall>* balls =
            w.training ? &balls_by_eps.at(eps) : nullptr;

        std::optional<KdTree> own_tree;
        const KdTree* tree = nullptr;
        if (splitter->uses_training()) {
          ctx.training_balls = *balls;
          own_tree = timed_build(ctx, rec.build_ms);
          tree = &*own_tree;
        } else {
          if (!shared_tree) shared_tree = timed_build(ctx, shared_build_ms);
          rec.build_ms = shared_build_ms;
          tree = &*shared_tree;
        }
        rec.tree = tree_stats(*tree);
        if (balls) rec.total_overlap = total_overlap(*tree, *balls).total_overlap;
        if (observer.tree_built) observer.tree_built(rec, *tree);
        run_queries(c, *tree, w, eps, rec, observer);
        report.records.push_back(std::move(rec));
      }
    }
  }

  std::stable_sort(report.records.begin(), report.records.end(),
                   [](const RunRecord& a, const RunRecord& b) {
                     return std::tie(a.splitter_rank, a.epsilon, a.sigma_thin, a.seed) <
                            std::tie(b.splitter_rank, b.epsilon, b.sigma_thin, b.seed);
                   });
  return report;
}

std::string report_header() {
  return "splitter,epsilon,sigma_thin,seed,n,d,nodes_visited_mean,leaves_visited_mean,"
         "dist_calcs_mean,coord_accesses_mean,avg_error,std_error,max_error,tree_nodes,"
         "tree_depth,avg_aspect,build_ms,total_overlap,config_hash";
}

void emit_report(const RunReport& report, std::ostream& out) {
  out << report_header() << '\n';
  for (const RunRecord& r : report.records) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, r.config_hash);
    out << r.splitter << ',' << format_real(r.epsilon) << ',' << format_real(r.sigma_thin) << ','
        << r.seed << ',' << r.n << ',' << r.d << ',' << format_real(r.nodes_visited_mean) << ','
        << format_real(r.leaves_visited_mean) << ',' << format_real(r.dist_calcs_mean) << ','
        << format_real(r.coord_accesses_mean) << ',' << format_real(r.errors.avg_error) << ','
        << format_real(r.errors.std_dev_error) << ',' << format_real(r.errors.max_error) << ','
        << r.tree.node_count << ',' << r.tree.depth << ','
        << format_real(r.tree.avg_leaf_aspect_ratio) << ',' << format_real(r.build_ms) << ',';
    if (r.total_overlap) out << *r.total_overlap;
    out << ',' << hash << '\n';
  }
}

void emit_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  emit_report(report, out);
  if (!out) throw std::runtime_error("error writing '" + path.string() + "'");
}

std::vector<SummaryRow> summarize(const RunReport& report) {
  std::vector<SummaryRow> rows;
  std::map<std::tuple<std::size_t, double, double>, std::size_t> slot;
  for (const RunRecord& r : report.records) {
    const auto key = std::make_tuple(r.splitter_rank, r.epsilon, r.sigma_thin);
    auto [it, inserted] = slot.emplace(key, rows.size());
    if (inserted) rows.push_back({r.splitter, r.epsilon, r.sigma_thin});
    SummaryRow& row = rows[it->second];
    ++row.runs;
    row.nodes_visited_mean += r.nodes_visited_mean;
    row.avg_error += r.errors.avg_error;
    row.std_error += r.errors.std_dev_error;
    row.max_error_mean += r.errors.max_error;
  }
  for (SummaryRow& row : rows) {
    const auto runs = static_cast<double>(row.runs);
    row.nodes_visited_mean /= runs;
    row.avg_error /= runs;
    row.std_error /= runs;
    row.max_error_mean /= runs;
  }
  return rows;
}

}  // namespace kdann
