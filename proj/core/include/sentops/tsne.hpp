#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sentops/matrix.hpp"

namespace sentops {

/// Exact t-SNE settings. Defaults follow van der Maaten & Hinton (2008) and
/// the reference bhtsne implementation.
struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  double init_stddev = 1e-4;
  /// After exaggeration, reject updates that raise the KL divergence.
  bool monotone_kl = true;
  /// Project onto this many principal components first; 0 keeps the raw
  /// vectors.
  std::size_t pca_components = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

/// Throws ContractError unless 1 < perplexity < n / 3 and the remaining
/// parameters are positive.
void validate(const TsneConfig& config, std::size_t n);

struct RowCalibration {
  double sigma = 0.0;  // Gaussian bandwidth, precision = 1 / (2 sigma^2)
  std::vector<double> probabilities;
  double perplexity = 0.0;  // achieved
  std::size_t steps = 0;
};

/// Binary search on the Gaussian precision so that the conditional
/// distribution over the row's neighbours has the requested perplexity
/// (|log2 achieved - log2 target| < 1e-5, at most 64 halvings).
/// `squared_distances` excludes the point itself. Throws ContractError when
/// all distances are zero.
RowCalibration calibrate_row(std::span<const double> squared_distances, double perplexity);

/// Centres the rows and projects them onto the leading `components`
/// principal axes (subspace iteration on the covariance, Rayleigh-Ritz
/// ordering, each axis signed so its largest-magnitude entry is positive).
/// Returns the centred input when components >= cols().
Matrix pca_reduce(const Matrix& points, std::size_t components);

/// Symmetrised joint affinities P = (P_cond + P_cond^T) / 2n. Rows that
/// fail calibration are reported with their point index.
Matrix joint_probabilities(const Matrix& points, double perplexity, std::size_t threads = 0);

/// KL(P || Q) of the embedding `coords`.
double kl_divergence(const Matrix& p, const Matrix& coords);

struct Projection2D {
  Matrix coords;  // n x 2
  /// KL(P || Q) with the unexaggerated P, before every iteration and once
  /// after the last (iterations + 1 entries).
  std::vector<double> kl_history;
  std::size_t rejected_steps = 0;
};

/// Exact O(n^2) t-SNE into two dimensions: gradient descent with momentum,
/// per-parameter gains and early exaggeration. Once exaggeration ends an
/// update that would raise the KL divergence is rejected and retried as a
/// plain gradient step with a halved learning rate (monotone_kl), so the
/// recorded KL never increases in that phase. Throws ContractError on a non-finite
/// gradient, naming the iteration.
Projection2D tsne(const Matrix& points, const TsneConfig& config);

/// TSV with header x, y, pattern_id, cluster_id, pair_id.
void write_projection_tsv(std::ostream& out, const Matrix& coords, std::span<const int> pattern_ids,
                          std::span<const int> cluster_ids, std::span<const std::int64_t> pair_ids);

/// Standalone SVG scatter, one colour per distinct value of `colour_key`.
void write_scatter_svg(std::ostream& out, const Matrix& coords, std::span<const int> colour_key,
                       const std::string& title);

}  // namespace sentops
