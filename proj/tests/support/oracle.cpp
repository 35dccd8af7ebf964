#include "oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace oracle {

namespace {

double entropy_of(const Labels& labels) {
  std::map<int, double> counts;
  for (int l : labels) counts[l] += 1.0;
  const double n = static_cast<double>(labels.size());
  double h = 0.0;
  for (const auto& [l, c] : counts) h -= (c / n) * std::log(c / n);
  return h;
}

// H(A | B) = sum_b p(b) H(A | B = b).
double conditional_entropy(const Labels& a, const Labels& b) {
  std::map<int, Labels> by_b;
  for (std::size_t i = 0; i < a.size(); ++i) by_b[b[i]].push_back(a[i]);
  const double n = static_cast<double>(a.size());
  double h = 0.0;
  for (const auto& [label, members] : by_b) h += static_cast<double>(members.size()) / n * entropy_of(members);
  return h;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::vector<int> margins(const Labels& labels) {
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  std::vector<int> out;
  for (const auto& [l, c] : counts) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

double table_mi(const std::vector<std::vector<int>>& t, const std::vector<int>& rows, const std::vector<int>& cols,
                int n) {
  double mi = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const int nij = t[i][j];
      if (nij == 0) continue;
      mi += static_cast<double>(nij) / n * std::log(static_cast<double>(n) * nij / (static_cast<double>(rows[i]) * cols[j]));
    }
  }
  return mi;
}

double emi_from_margins(const std::vector<int>& rows, const std::vector<int>& cols) {
  static std::map<std::pair<std::vector<int>, std::vector<int>>, double> cache;
  const auto key = std::make_pair(rows, cols);
  if (const auto it = cache.find(key); it != cache.end()) return it->second;

  const int n = std::accumulate(rows.begin(), rows.end(), 0);
  double fixed = 1.0;
  for (int r : rows) fixed *= factorial(r);
  for (int c : cols) fixed *= factorial(c);
  fixed /= factorial(n);

  std::vector<std::vector<int>> table(rows.size(), std::vector<int>(cols.size(), 0));
  std::vector<int> col_left = cols;
  double expected = 0.0;
  double total_probability = 0.0;
  std::function<void(std::size_t, std::size_t, int)> fill = [&](std::size_t i, std::size_t j, int row_left) {
    if (i == rows.size()) {
      for (int c : col_left) {
        if (c != 0) return;
      }
      double p = fixed;
      for (const auto& r : table) {
        for (int v : r) p /= factorial(v);
      }
      total_probability += p;
      expected += p * table_mi(table, rows, cols, n);
      return;
    }
    if (j + 1 == cols.size()) {
      if (row_left > col_left[j]) return;
      table[i][j] = row_left;
      col_left[j] -= row_left;
      fill(i + 1, 0, i + 1 < rows.size() ? rows[i + 1] : 0);
      col_left[j] += row_left;
      table[i][j] = 0;
      return;
    }
    for (int v = 0; v <= std::min(row_left, col_left[j]); ++v) {
      table[i][j] = v;
      col_left[j] -= v;
      fill(i, j + 1, row_left - v);
      col_left[j] += v;
    }
    table[i][j] = 0;
  };
  fill(0, 0, rows[0]);
  // The hypergeometric weights must form a distribution.
  if (std::abs(total_probability - 1.0) > 1e-9) throw std::logic_error("oracle: table probabilities do not sum to 1");
  cache.emplace(key, expected);
  return expected;
}

bool same_partition(const Labels& a, const Labels& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    }
  }
  return true;
}

}  // namespace

double ari(const Labels& truth, const Labels& pred) {
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      const bool st = truth[i] == truth[j];
      const bool sp = pred[i] == pred[j];
      if (st && sp) a += 1;
      else if (st) b += 1;
      else if (sp) c += 1;
      else d += 1;
    }
  }
  const double denom = (a + b) * (b + d) + (a + c) * (c + d);
  if (denom == 0.0) return 1.0;
  return 2.0 * (a * d - b * c) / denom;
}

Hcv homogeneity_completeness(const Labels& truth, const Labels& pred) {
  const double hc = entropy_of(truth);
  const double hk = entropy_of(pred);
  const double h = hc == 0.0 ? 1.0 : 1.0 - conditional_entropy(truth, pred) / hc;
  const double c = hk == 0.0 ? 1.0 : 1.0 - conditional_entropy(pred, truth) / hk;
  const double v = h + c == 0.0 ? 0.0 : 2.0 * h * c / (h + c);
  return {h, c, v};
}

double mutual_information(const Labels& truth, const Labels& pred) {
  const double n = static_cast<double>(truth.size());
  std::map<int, double> pt, pp;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    pt[truth[i]] += 1.0 / n;
    pp[pred[i]] += 1.0 / n;
    joint[{truth[i], pred[i]}] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [key, p] : joint) mi += p * std::log(p / (pt[key.first] * pp[key.second]));
  return mi;
}

double expected_mutual_information(const Labels& truth, const Labels& pred) {
  return emi_from_margins(margins(truth), margins(pred));
}

double ami(const Labels& truth, const Labels& pred) {
  const double mi = mutual_information(truth, pred);
  const double emi = expected_mutual_information(truth, pred);
  const double norm = 0.5 * (entropy_of(truth) + entropy_of(pred));
  const double denom = norm - emi;
  if (std::abs(denom) < 1e-12) return same_partition(truth, pred) ? 1.0 : 0.0;
  return (mi - emi) / denom;
}

std::vector<Labels> set_partitions(std::size_t n, int max_blocks) {
  std::vector<Labels> out;
  Labels current(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int used) {
    if (i == n) {
      out.push_back(current);
      return;
    }
    for (int b = 0; b <= used && b < max_blocks; ++b) {
      current[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  if (n == 0) return {Labels{}};
  current[0] = 0;
  rec(1, 1);
  return out;
}

std::vector<Labels> all_labelings(std::size_t n, int classes) {
  std::vector<Labels> out;
  Labels current(n, 0);
  while (true) {
    out.push_back(current);
    std::size_t i = 0;
    while (i < n && ++current[i] == classes) current[i++] = 0;
    if (i == n) break;
  }
  return out;
}

double optimal_1d_inertia(const std::vector<double>& points, int k) {
  const std::size_t n = points.size();
  double best = std::numeric_limits<double>::infinity();
  Labels assign(n, 0);
  while (true) {
    std::vector<double> sum(k, 0.0), count(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[assign[i]] += points[i];
      count[assign[i]] += 1.0;
    }
    if (std::all_of(count.begin(), count.end(), [](double c) { return c > 0.0; })) {
      double sse = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double mean = sum[assign[i]] / count[assign[i]];
        sse += (points[i] - mean) * (points[i] - mean);
      }
      best = std::min(best, sse);
    }
    std::size_t i = 0;
    while (i < n && ++assign[i] == k) assign[i++] = 0;
    if (i == n) break;
  }
  return best;
}

Run longest_common_run(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       const std::vector<std::string>& forbidden) {
  const std::set<std::string> banned(forbidden.begin(), forbidden.end());
  Run best{0, 0, 0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      for (std::size_t len = 1; i + len <= a.size() && j + len <= b.size(); ++len) {
        bool ok = true;
        for (std::size_t t = 0; t < len && ok; ++t) ok = a[i + t] == b[j + t] && !banned.contains(a[i + t]);
        if (!ok) break;
        if (len > best.length) best = {i, j, len};
      }
    }
  }
  return best;
}

double linear_separability(const std::vector<double>& xy, const Labels& labels, int epochs) {
  const std::size_t n = labels.size();
  std::map<int, int> index;
  for (int l : labels) index.emplace(l, 0);
  int k = 0;
  for (auto& [l, id] : index) id = k++;

  double mean[2] = {0, 0}, sd[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    mean[0] += xy[2 * i] / n;
    mean[1] += xy[2 * i + 1] / n;
  }
  for (std::size_t i = 0; i < n; ++i) {
    sd[0] += std::pow(xy[2 * i] - mean[0], 2) / n;
    sd[1] += std::pow(xy[2 * i + 1] - mean[1], 2) / n;
  }
  sd[0] = std::sqrt(sd[0]) + 1e-12;
  sd[1] = std::sqrt(sd[1]) + 1e-12;
  std::vector<std::array<double, 2>> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = {(xy[2 * i] - mean[0]) / sd[0], (xy[2 * i + 1] - mean[1]) / sd[1]};

  std::vector<std::array<double, 3>> w(k, {0.0, 0.0, 0.0});
  const double rate = 0.5;
  std::vector<double> logits(k), prob(k);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<std::array<double, 3>> grad(k, {0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        logits[c] = w[c][0] * x[i][0] + w[c][1] * x[i][1] + w[c][2];
        top = std::max(top, logits[c]);
      }
      double z = 0.0;
      for (int c = 0; c < k; ++c) z += prob[c] = std::exp(logits[c] - top);
      const int y = index[labels[i]];
      for (int c = 0; c < k; ++c) {
        const double g = prob[c] / z - (c == y ? 1.0 : 0.0);
        grad[c][0] += g * x[i][0] / n;
        grad[c][1] += g * x[i][1] / n;
        grad[c][2] += g / n;
      }
    }
    for (int c = 0; c < k; ++c) {
      for (int t = 0; t < 3; ++t) w[c][t] -= rate * grad[c][t];
    }
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int arg = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double s = w[c][0] * x[i][0] + w[c][1] * x[i][1] + w[c][2];
      if (s > top) {
        top = s;
        arg = c;
      }
    }
    if (arg == index[labels[i]]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double silhouette(const std::vector<std::vector<double>>& points, const Labels& assignment) {
  const auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += (a[t] - b[t]) * (a[t] - b[t]);
    return std::sqrt(s);
  };
  const std::set<int> clusters(assignment.begin(), assignment.end());
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::map<int, std::pair<double, int>> acc;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      auto& [sum, count] = acc[assignment[j]];
      sum += dist(points[i], points[j]);
      ++count;
    }
    if (!acc.contains(assignment[i])) continue;  // singleton: s = 0
    const double a = acc[assignment[i]].first / acc[assignment[i]].second;
    double b = std::numeric_limits<double>::infinity();
    for (int c : clusters) {
      if (c != assignment[i]) b = std::min(b, acc[c].first / acc[c].second);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(points.size());
}

}  // namespace oracle
