#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "sentops/matrix.hpp"
#include "sentops/pattern.hpp"

namespace sentops {

struct Clustering {
  std::size_t k = 0;
  std::vector<int> assignment;  // cluster id in [0, k) per point
  Matrix centroids;             // k x dim
  double total_inertia = 0.0;

  /// Inertia of every restart in restart order, and the index of the winner.
  std::vector<double> restart_inertia;
  std::size_t best_restart = 0;
};

struct KMeansOptions {
  std::size_t k = 2;
  std::size_t restarts = 100;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

/// A single Lloyd run from k-means++ seeding, in the caller's point order.
struct KMeansRun {
  Clustering clustering;
  /// Inertia after every assignment step; non-increasing.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
  bool converged = false;
};

KMeansRun kmeans_single(const Matrix& points, std::size_t k, std::size_t max_iter, double tol, std::uint64_t seed);

/// Best of `restarts` k-means++/Lloyd runs by total inertia (ties go to the
/// earlier restart). Restart r is seeded with derive_seed(seed, r) and the
/// restarts may run concurrently. Points are clustered in lexicographic row
/// order, so the result does not depend on the input order.
///
/// Throws ContractError when k is zero, restarts is zero or k exceeds the
/// number of distinct points.
Clustering kmeans(const Matrix& points, const KMeansOptions& options);

/// Sum of squared distances of every point to its assigned centroid.
double recompute_inertia(const Matrix& points, const Clustering& clustering);

struct PatternInertia {
  int pattern_id = 0;
  double value = 0.0;  // mean squared distance to the assigned centroids
  std::size_t size = 0;
};

/// One record per pattern id, sorted by descending value (ties by id).
std::vector<PatternInertia> pattern_inertia(const Matrix& points, std::span<const int> pattern_ids,
                                            const Clustering& clustering);

/// Removes the `top_n` groups with the highest inertia. Pattern ids index
/// into `groups`. Requires top_n < groups.size().
std::vector<PatternGroup> remove_noisy_patterns(std::span<const PatternGroup> groups,
                                                std::span<const PatternInertia> inertias, std::size_t top_n);

struct KSelectionRow {
  std::size_t k = 0;
  double inertia = 0.0;
  double davies_bouldin = 0.0;
  double silhouette = 0.0;
};

struct KSelectionReport {
  std::vector<KSelectionRow> rows;
  std::size_t best_k_davies_bouldin = 0;  // argmin
  std::size_t best_k_silhouette = 0;      // argmax
  bool criteria_agree() const noexcept { return best_k_davies_bouldin == best_k_silhouette; }
};

/// Clusters at every k in [k_min, k_max] and scores each result with both
/// internal indices. Ties go to the smaller k. `base.k` is ignored.
KSelectionReport select_k(const Matrix& points, std::size_t k_min, std::size_t k_max, const KMeansOptions& base);

/// JSON: {"k", "total_inertia", "assignment", "centroids", ...}.
void write_clustering(std::ostream& out, const Clustering& clustering, std::string_view config_hash);

struct LoadedClustering {
  std::string config_hash;
  Clustering clustering;
};

LoadedClustering read_clustering(std::istream& in);

}  // namespace sentops
