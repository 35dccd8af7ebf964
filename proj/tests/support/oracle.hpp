#pragma once

// Brute-force reference implementations. They share no code with the
// library and favour the textbook definition over speed.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

using Labels = std::vector<int>;

// Pair counting over all i < j.
double ari(const Labels& truth, const Labels& pred);

struct Hcv {
  double h, c, v;
};
// Conditional entropies summed cluster by cluster.
Hcv homogeneity_completeness(const Labels& truth, const Labels& pred);

double mutual_information(const Labels& truth, const Labels& pred);

// E[MI] by enumerating every contingency table with the observed margins and
// weighting it with its multivariate hypergeometric probability.
double expected_mutual_information(const Labels& truth, const Labels& pred);

double ami(const Labels& truth, const Labels& pred);

// Every restricted growth string of length n with at most max_blocks blocks:
// one representative per set partition.
std::vector<Labels> set_partitions(std::size_t n, int max_blocks);

// Every vector in {0, ..., classes-1}^n.
std::vector<Labels> all_labelings(std::size_t n, int classes);

// Minimum within-cluster sum of squares over every assignment of the 1-d
// points to exactly k non-empty clusters.
double optimal_1d_inertia(const std::vector<double>& points, int k);

struct Run {
  std::size_t start_a, start_b, length;
};
// All common substrings enumerated explicitly; longest wins, then the
// smallest start in a, then in b. length == 0 when none exists.
Run longest_common_run(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       const std::vector<std::string>& forbidden);

// Training accuracy of a multinomial logistic regression fitted by full-batch
// gradient descent on standardised 2-d inputs.
double linear_separability(const std::vector<double>& xy, const Labels& labels, int epochs = 3000);

// Silhouette mean computed straight from the definition.
double silhouette(const std::vector<std::vector<double>>& points, const Labels& assignment);

}  // namespace oracle
