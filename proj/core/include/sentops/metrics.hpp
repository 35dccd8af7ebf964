#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sentops/matrix.hpp"

namespace sentops {

/// Counts n_ij of points with true class i and predicted cluster j. Labels
/// may be arbitrary integers; rows and columns follow ascending label value.
class ContingencyTable {
 public:
  ContingencyTable(std::span<const int> truth, std::span<const int> pred);

  std::size_t rows() const noexcept { return row_sums_.size(); }
  std::size_t cols() const noexcept { return col_sums_.size(); }
  std::size_t total() const noexcept { return total_; }
  std::size_t count(std::size_t i, std::size_t j) const noexcept { return counts_[i * cols() + j]; }
  const std::vector<std::size_t>& row_sums() const noexcept { return row_sums_; }
  const std::vector<std::size_t>& col_sums() const noexcept { return col_sums_; }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> row_sums_;
  std::vector<std::size_t> col_sums_;
  std::size_t total_ = 0;
};

/// Hubert-Arabie adjusted Rand index. Returns 1 in the degenerate case where
/// the chance-corrected denominator vanishes (both labelings all one cluster
/// or both all singletons). Requires equal lengths of at least 2.
double adjusted_rand_index(std::span<const int> truth, std::span<const int> pred);

struct HomogeneityCompleteness {
  double homogeneity = 1.0;
  double completeness = 1.0;
  double v_measure = 1.0;
};

/// Natural-log entropies. h = 1 when H(C) = 0, c = 1 when H(K) = 0 and
/// V = 0 when h + c = 0.
HomogeneityCompleteness homogeneity_completeness_v(std::span<const int> truth, std::span<const int> pred);

/// Mutual information in nats.
double mutual_information(const ContingencyTable& table);

/// Expected mutual information under the hypergeometric model of random
/// tables with the margins of `table`, summed exactly with log-factorials.
double expected_mutual_information(const ContingencyTable& table);

enum class AmiNormalizer { kArithmetic, kMax };

/// (MI - E[MI]) / (norm(H(C), H(K)) - E[MI]). When the denominator vanishes
/// the result is 1 for identical partitions and 0 otherwise.
double adjusted_mutual_information(std::span<const int> truth, std::span<const int> pred,
                                   AmiNormalizer normalizer = AmiNormalizer::kArithmetic);

/// Davies-Bouldin index over clusters formed by `assignment`, using the
/// cluster means as centroids. Needs at least two clusters; throws
/// ContractError when two centroids coincide.
double davies_bouldin(const Matrix& points, std::span<const int> assignment);

/// Per-point silhouette s(i) = (b - a) / max(a, b) with Euclidean distances;
/// points in singleton clusters score 0.
std::vector<double> silhouette_samples(const Matrix& points, std::span<const int> assignment, std::size_t threads = 0);

/// Mean silhouette. Needs 2 <= clusters <= n - 1.
double silhouette(const Matrix& points, std::span<const int> assignment, std::size_t threads = 0);

struct ExternalScores {
  double ari = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
  double ami = 0.0;
};

ExternalScores external_scores(std::span<const int> truth, std::span<const int> pred,
                               AmiNormalizer normalizer = AmiNormalizer::kArithmetic);

}  // namespace sentops
