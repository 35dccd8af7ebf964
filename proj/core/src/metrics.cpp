#include "sentops/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "parallel.hpp"
#include "sentops/error.hpp"

namespace sentops {

namespace {

void check_labels(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) {
    throw ContractError("label vectors differ in length (" + std::to_string(truth.size()) + " vs " +
                        std::to_string(pred.size()) + ")");
  }
  if (truth.size() < 2) throw ContractError("at least two labels are required");
}

double choose2(std::size_t x) { return 0.5 * static_cast<double>(x) * (static_cast<double>(x) - 1.0); }

double entropy(const std::vector<std::size_t>& sizes, std::size_t n) {
  double h = 0.0;
  const double total = static_cast<double>(n);
  for (std::size_t s : sizes) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / total;
    h -= p * std::log(p);
  }
  return h;
}

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::vector<int> dense_labels(std::span<const int> labels, std::size_t& k) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [label, id] : ids) id = next++;
  k = ids.size();
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids[l]);
  return out;
}

bool same_partition(const ContingencyTable& t) {
  // Identical up to relabeling iff every row and column has a single
  // non-zero cell.
  if (t.rows() != t.cols()) return false;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    std::size_t nz = 0;
    for (std::size_t j = 0; j < t.cols(); ++j) nz += t.count(i, j) != 0;
    if (nz != 1) return false;
  }
  return true;
}

}  // namespace

ContingencyTable::ContingencyTable(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw ContractError("ContingencyTable: label vectors differ in length");
  std::size_t kt = 0;
  std::size_t kp = 0;
  const auto t = dense_labels(truth, kt);
  const auto p = dense_labels(pred, kp);
  counts_.assign(kt * kp, 0);
  row_sums_.assign(kt, 0);
  col_sums_.assign(kp, 0);
  total_ = truth.size();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto r = static_cast<std::size_t>(t[i]);
    const auto c = static_cast<std::size_t>(p[i]);
    ++counts_[r * kp + c];
    ++row_sums_[r];
    ++col_sums_[c];
  }
}

double adjusted_rand_index(std::span<const int> truth, std::span<const int> pred) {
  check_labels(truth, pred);
  const ContingencyTable t(truth, pred);
  double index = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) index += choose2(t.count(i, j));
  }
  double sum_rows = 0.0;
  double sum_cols = 0.0;
  for (auto a : t.row_sums()) sum_rows += choose2(a);
  for (auto b : t.col_sums()) sum_cols += choose2(b);
  const double expected = sum_rows * sum_cols / choose2(t.total());
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

HomogeneityCompleteness homogeneity_completeness_v(std::span<const int> truth, std::span<const int> pred) {
  check_labels(truth, pred);
  const ContingencyTable t(truth, pred);
  const double h_c = entropy(t.row_sums(), t.total());
  const double h_k = entropy(t.col_sums(), t.total());
  const double mi = mutual_information(t);
  HomogeneityCompleteness out;
  // H(C|K) = H(C) - MI and H(K|C) = H(K) - MI.
  out.homogeneity = h_c == 0.0 ? 1.0 : std::clamp(mi / h_c, 0.0, 1.0);
  out.completeness = h_k == 0.0 ? 1.0 : std::clamp(mi / h_k, 0.0, 1.0);
  const double s = out.homogeneity + out.completeness;
  out.v_measure = s == 0.0 ? 0.0 : 2.0 * out.homogeneity * out.completeness / s;
  return out;
}

double mutual_information(const ContingencyTable& t) {
  const double n = static_cast<double>(t.total());
  double mi = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      const auto nij = t.count(i, j);
      if (nij == 0) continue;
      const double x = static_cast<double>(nij);
      mi += (x / n) * std::log(n * x / (static_cast<double>(t.row_sums()[i]) * static_cast<double>(t.col_sums()[j])));
    }
  }
  return std::max(mi, 0.0);
}

double expected_mutual_information(const ContingencyTable& t) {
  const std::size_t n = t.total();
  std::vector<double> lf(n + 1, 0.0);  // lf[x] = log(x!)
  for (std::size_t x = 2; x <= n; ++x) lf[x] = lf[x - 1] + std::log(static_cast<double>(x));
  const double dn = static_cast<double>(n);

  CompensatedSum emi;
  for (std::size_t a : t.row_sums()) {
    for (std::size_t b : t.col_sums()) {
      const std::size_t lo = std::max<std::size_t>(1, a + b > n ? a + b - n : 0);
      const std::size_t hi = std::min(a, b);
      const double fixed = lf[a] + lf[b] + lf[n - a] + lf[n - b] - lf[n];
      for (std::size_t nij = lo; nij <= hi; ++nij) {
        const double x = static_cast<double>(nij);
        const double term = (x / dn) * std::log(dn * x / (static_cast<double>(a) * static_cast<double>(b)));
        const double log_p = fixed - lf[nij] - lf[a - nij] - lf[b - nij] - lf[n - a - b + nij];
        emi.add(term * std::exp(log_p));
      }
    }
  }
  return emi.value();
}

double adjusted_mutual_information(std::span<const int> truth, std::span<const int> pred, AmiNormalizer normalizer) {
  check_labels(truth, pred);
  const ContingencyTable t(truth, pred);
  const double h_c = entropy(t.row_sums(), t.total());
  const double h_k = entropy(t.col_sums(), t.total());
  const double mi = mutual_information(t);
  const double emi = expected_mutual_information(t);
  const double norm = normalizer == AmiNormalizer::kArithmetic ? 0.5 * (h_c + h_k) : std::max(h_c, h_k);
  const double denom = norm - emi;
  if (std::abs(denom) < 1e-12) return same_partition(t) ? 1.0 : 0.0;
  return (mi - emi) / denom;
}

double davies_bouldin(const Matrix& points, std::span<const int> assignment) {
  if (assignment.size() != points.rows()) throw ContractError("davies_bouldin: assignment length differs from point count");
  std::size_t k = 0;
  const auto labels = dense_labels(assignment, k);
  if (k < 2) throw ContractError("davies_bouldin: need at least two clusters");

  Matrix centroids(k, points.cols());
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++sizes[c];
    auto row = centroids.row(c);
    const auto p = points.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] += p[d];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& x : centroids.row(c)) x /= static_cast<double>(sizes[c]);
  }
  std::vector<double> spread(k, 0.0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    spread[c] += euclidean_distance(points.row(i), centroids.row(c));
  }
  for (std::size_t c = 0; c < k; ++c) spread[c] /= static_cast<double>(sizes[c]);

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double m = euclidean_distance(centroids.row(i), centroids.row(j));
      if (m == 0.0) {
        throw ContractError("davies_bouldin: clusters " + std::to_string(i) + " and " + std::to_string(j) +
                            " have coincident centroids");
      }
      worst = std::max(worst, (spread[i] + spread[j]) / m);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

std::vector<double> silhouette_samples(const Matrix& points, std::span<const int> assignment, std::size_t threads) {
  const std::size_t n = points.rows();
  if (assignment.size() != n) throw ContractError("silhouette: assignment length differs from point count");
  std::size_t k = 0;
  const auto labels = dense_labels(assignment, k);
  if (k < 2 || k > n - 1) {
    throw ContractError("silhouette: need 2 <= clusters <= n - 1, got " + std::to_string(k) + " clusters for " +
                        std::to_string(n) + " points");
  }
  std::vector<std::size_t> sizes(k, 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];

  std::vector<double> s(n, 0.0);
  detail::parallel_for(n, threads, [&](std::size_t i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] < 2) return;
    std::vector<double> sums(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(labels[j])] += euclidean_distance(points.row(i), points.row(j));
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double m = std::max(a, b);
    s[i] = m > 0.0 ? (b - a) / m : 0.0;
  });
  return s;
}

double silhouette(const Matrix& points, std::span<const int> assignment, std::size_t threads) {
  const auto s = silhouette_samples(points, assignment, threads);
  CompensatedSum sum;
  for (double x : s) sum.add(x);
  return sum.value() / static_cast<double>(s.size());
}

ExternalScores external_scores(std::span<const int> truth, std::span<const int> pred, AmiNormalizer normalizer) {
  const auto hcv = homogeneity_completeness_v(truth, pred);
  return {adjusted_rand_index(truth, pred), hcv.homogeneity, hcv.completeness, hcv.v_measure,
          adjusted_mutual_information(truth, pred, normalizer)};
}

}  // namespace sentops
