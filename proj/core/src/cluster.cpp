#include "sentops/cluster.hpp"

#include <algorithm>
#include <istream>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "parallel.hpp"
#include "sentops/error.hpp"
#include "sentops/metrics.hpp"
#include "sentops/random.hpp"

namespace sentops {

namespace {

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::size_t first = rng.below(n);
  std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    }
    if (pick == n) pick = rng.below(n);
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
  }
  return centroids;
}

void assign(const Matrix& points, const Matrix& centroids, std::vector<int>& labels) {
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
  }
}

// Moves the point farthest from its centroid into each empty cluster.
void repair_empty(const Matrix& points, Matrix& centroids, std::vector<int>& labels) {
  std::vector<std::size_t> sizes(centroids.rows(), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  for (std::size_t e = 0; e < sizes.size(); ++e) {
    if (sizes[e] != 0) continue;
    std::size_t far = points.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const auto l = static_cast<std::size_t>(labels[i]);
      if (sizes[l] < 2) continue;
      const double d = squared_distance(points.row(i), centroids.row(l));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == points.rows()) throw ContractError("kmeans: cannot repair empty cluster");
    --sizes[static_cast<std::size_t>(labels[far])];
    labels[far] = static_cast<int>(e);
    sizes[e] = 1;
    std::copy(points.row(far).begin(), points.row(far).end(), centroids.row(e).begin());
  }
}

double inertia_of(const Matrix& points, const Matrix& centroids, std::span<const int> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    sum += squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
  }
  return sum;
}

Matrix cluster_means(const Matrix& points, std::span<const int> labels, const Matrix& previous) {
  Matrix sums(previous.rows(), points.cols());
  std::vector<std::size_t> counts(previous.rows(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    ++counts[l];
    auto row = sums.row(l);
    const auto p = points.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] += p[d];
  }
  for (std::size_t c = 0; c < sums.rows(); ++c) {
    auto row = sums.row(c);
    if (counts[c] == 0) {
      std::copy(previous.row(c).begin(), previous.row(c).end(), row.begin());
      continue;
    }
    for (auto& x : row) x /= static_cast<double>(counts[c]);
  }
  return sums;
}

void check_k(const Matrix& points, std::size_t k) {
  if (k == 0) throw ContractError("kmeans: k must be positive");
  const std::size_t distinct = count_distinct_rows(points);
  if (k > distinct) {
    throw ContractError("kmeans: k = " + std::to_string(k) + " exceeds the " + std::to_string(distinct) +
                        " distinct points");
  }
}

}  // namespace

KMeansRun kmeans_single(const Matrix& points, std::size_t k, std::size_t max_iter, double tol, std::uint64_t seed) {
  if (k == 0 || k > points.rows()) throw ContractError("kmeans: k out of range");
  Rng rng(seed);
  KMeansRun run;
  Matrix centroids = seed_plus_plus(points, k, rng);
  std::vector<int> labels(points.rows(), 0);

  for (run.iterations = 0; run.iterations < max_iter; ++run.iterations) {
    assign(points, centroids, labels);
    repair_empty(points, centroids, labels);
    run.inertia_history.push_back(inertia_of(points, centroids, labels));

    Matrix next = cluster_means(points, labels, centroids);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, squared_distance(next.row(c), centroids.row(c)));
    centroids = std::move(next);
    if (std::sqrt(shift) < tol) {
      run.converged = true;
      ++run.iterations;
      break;
    }
  }
  assign(points, centroids, labels);
  repair_empty(points, centroids, labels);
  run.clustering.total_inertia = inertia_of(points, centroids, labels);
  run.inertia_history.push_back(run.clustering.total_inertia);
  run.clustering.k = k;
  run.clustering.assignment = std::move(labels);
  run.clustering.centroids = std::move(centroids);
  run.clustering.restart_inertia = {run.clustering.total_inertia};
  return run;
}

Clustering kmeans(const Matrix& points, const KMeansOptions& options) {
  if (options.restarts == 0) throw ContractError("kmeans: restarts must be at least 1");
  check_k(points, options.k);

  std::vector<std::size_t> order(points.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto a = points.row(i);
    const auto b = points.row(j);
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  });
  Matrix sorted(points.rows(), points.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy(points.row(order[i]).begin(), points.row(order[i]).end(), sorted.row(i).begin());
  }

  std::vector<Clustering> runs(options.restarts);
  detail::parallel_for(options.restarts, options.threads, [&](std::size_t r) {
    runs[r] = kmeans_single(sorted, options.k, options.max_iter, options.tol, derive_seed(options.seed, r)).clustering;
  });

  std::size_t best = 0;
  std::vector<double> inertias(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    inertias[r] = runs[r].total_inertia;
    if (inertias[r] < inertias[best]) best = r;
  }

  Clustering out = std::move(runs[best]);
  std::vector<int> assignment(points.rows());
  for (std::size_t i = 0; i < order.size(); ++i) assignment[order[i]] = out.assignment[i];
  out.assignment = std::move(assignment);
  out.restart_inertia = std::move(inertias);
  out.best_restart = best;
  return out;
}

double recompute_inertia(const Matrix& points, const Clustering& clustering) {
  return inertia_of(points, clustering.centroids, clustering.assignment);
}

std::vector<PatternInertia> pattern_inertia(const Matrix& points, std::span<const int> pattern_ids,
                                            const Clustering& clustering) {
  if (pattern_ids.size() != points.rows() || clustering.assignment.size() != points.rows()) {
    throw ContractError("pattern_inertia: points, pattern ids and assignment differ in length");
  }
  std::map<int, PatternInertia> acc;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto& rec = acc[pattern_ids[i]];
    rec.pattern_id = pattern_ids[i];
    rec.value += squared_distance(points.row(i), clustering.centroids.row(static_cast<std::size_t>(clustering.assignment[i])));
    ++rec.size;
  }
  std::vector<PatternInertia> out;
  for (auto& [id, rec] : acc) {
    rec.value /= static_cast<double>(rec.size);
    out.push_back(rec);
  }
  std::stable_sort(out.begin(), out.end(), [](const PatternInertia& a, const PatternInertia& b) { return a.value > b.value; });
  return out;
}

std::vector<PatternGroup> remove_noisy_patterns(std::span<const PatternGroup> groups,
                                                std::span<const PatternInertia> inertias, std::size_t top_n) {
  if (top_n >= groups.size() && !(top_n == 0 && groups.empty())) {
    throw ContractError("remove_noisy_patterns: top_n must be smaller than the number of groups");
  }
  std::vector<PatternInertia> ranked(inertias.begin(), inertias.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const PatternInertia& a, const PatternInertia& b) { return a.value > b.value; });
  if (top_n > ranked.size()) throw ContractError("remove_noisy_patterns: fewer inertia records than top_n");
  std::vector<bool> drop(groups.size(), false);
  for (std::size_t i = 0; i < top_n; ++i) {
    const auto id = ranked[i].pattern_id;
    if (id < 0 || static_cast<std::size_t>(id) >= groups.size()) throw ContractError("remove_noisy_patterns: unknown pattern id");
    drop[static_cast<std::size_t>(id)] = true;
  }
  std::vector<PatternGroup> kept;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!drop[g]) kept.push_back(groups[g]);
  }
  return kept;
}

KSelectionReport select_k(const Matrix& points, std::size_t k_min, std::size_t k_max, const KMeansOptions& base) {
  if (k_min < 2 || k_min > k_max) throw ContractError("select_k: need 2 <= k_min <= k_max");
  const std::size_t distinct = count_distinct_rows(points);
  if (k_max > distinct) {
    throw ContractError("select_k: k_max = " + std::to_string(k_max) + " exceeds the " + std::to_string(distinct) +
                        " distinct points");
  }
  if (k_max >= points.rows()) throw ContractError("select_k: silhouette needs k_max < number of points");

  KSelectionReport report;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    KMeansOptions opts = base;
    opts.k = k;
    const Clustering c = kmeans(points, opts);
    report.rows.push_back({k, c.total_inertia, davies_bouldin(points, c.assignment),
                           silhouette(points, c.assignment, base.threads)});
  }
  const auto& rows = report.rows;
  report.best_k_davies_bouldin =
      std::min_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.davies_bouldin < b.davies_bouldin; })->k;
  report.best_k_silhouette =
      std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.silhouette < b.silhouette; })->k;
  return report;
}

void write_clustering(std::ostream& out, const Clustering& c, std::string_view config_hash) {
  nlohmann::json centroids = nlohmann::json::array();
  for (std::size_t i = 0; i < c.centroids.rows(); ++i) {
    const auto row = c.centroids.row(i);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  out << nlohmann::json{{"artifact", "clustering"},
                        {"config_hash", config_hash},
                        {"k", c.k},
                        {"total_inertia", c.total_inertia},
                        {"best_restart", c.best_restart},
                        {"restart_inertia", c.restart_inertia},
                        {"assignment", c.assignment},
                        {"centroids", centroids}}
             .dump()
      << '\n';
}

LoadedClustering read_clustering(std::istream& in) {
  LoadedClustering loaded;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.value("artifact", "") != "clustering") throw FormatError("not a clustering file");
    loaded.config_hash = doc.at("config_hash").get<std::string>();
    auto& c = loaded.clustering;
    c.k = doc.at("k").get<std::size_t>();
    c.total_inertia = doc.at("total_inertia").get<double>();
    c.best_restart = doc.at("best_restart").get<std::size_t>();
    c.restart_inertia = doc.at("restart_inertia").get<std::vector<double>>();
    c.assignment = doc.at("assignment").get<std::vector<int>>();
    for (const auto& row : doc.at("centroids")) c.centroids.append_row(row.get<std::vector<double>>());
    if (c.centroids.rows() != c.k) throw FormatError("centroid count differs from k");
    for (int l : c.assignment) {
      if (l < 0 || static_cast<std::size_t>(l) >= c.k) throw FormatError("cluster id out of range");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("clustering file: ") + e.what());
  }
  return loaded;
}

}  // namespace sentops
