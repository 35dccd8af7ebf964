#include "sentops/tsne.hpp"

#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "parallel.hpp"
#include "sentops/error.hpp"
#include "sentops/random.hpp"

namespace sentops {

namespace {

constexpr double kLog2Tolerance = 1e-5;
constexpr std::size_t kMaxCalibrationSteps = 64;
constexpr std::size_t kMaxRetries = 30;

struct Evaluation {
  double kl = 0.0;
  Matrix grad;
};

// Gradient of KL(exaggeration * P || Q) and KL(P || Q) at `y`. Row partial
// sums are reduced in index order, so the result does not depend on the
// number of workers.
Evaluation evaluate(const Matrix& p, const Matrix& y, double exaggeration, std::size_t threads) {
  const std::size_t n = y.rows();
  std::vector<double> z_rows(n, 0.0);
  detail::parallel_for(n, threads, [&](std::size_t i) {
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) z += 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
    }
    z_rows[i] = z;
  });
  const double z = std::accumulate(z_rows.begin(), z_rows.end(), 0.0);

  Evaluation ev;
  ev.grad = Matrix(n, 2);
  std::vector<double> kl_rows(n, 0.0);
  detail::parallel_for(n, threads, [&](std::size_t i) {
    double gx = 0.0;
    double gy = 0.0;
    double kl = 0.0;
    const auto yi = y.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto yj = y.row(j);
      const double num = 1.0 / (1.0 + squared_distance(yi, yj));
      const double q = num / z;
      const double pij = p(i, j);
      const double mult = (exaggeration * pij - q) * num;
      gx += mult * (yi[0] - yj[0]);
      gy += mult * (yi[1] - yj[1]);
      if (pij > 0.0) kl += pij * std::log(pij / std::max(q, std::numeric_limits<double>::min()));
    }
    ev.grad(i, 0) = 4.0 * gx;
    ev.grad(i, 1) = 4.0 * gy;
    kl_rows[i] = kl;
  });
  ev.kl = std::accumulate(kl_rows.begin(), kl_rows.end(), 0.0);
  return ev;
}

void recentre(Matrix& y) {
  const std::size_t n = y.rows();
  for (std::size_t d = 0; d < 2; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += y(i, d);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) y(i, d) -= mean;
  }
}

bool finite(const Matrix& m) {
  const auto d = m.data();
  return std::all_of(d.begin(), d.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void validate(const TsneConfig& c, std::size_t n) {
  if (n < 4) throw ContractError("tsne: need at least 4 points");
  if (!(c.perplexity > 1.0) || !(c.perplexity < static_cast<double>(n) / 3.0)) {
    throw ContractError("tsne: perplexity must satisfy 1 < perplexity < n/3 (n = " + std::to_string(n) + ")");
  }
  if (c.iterations == 0 || !(c.early_exaggeration > 0.0) || !(c.learning_rate > 0.0) ||
      !(c.initial_momentum > 0.0) || !(c.final_momentum > 0.0) || !(c.init_stddev > 0.0)) {
    throw ContractError("tsne: iterations, exaggeration, learning rate, momenta and init scale must be positive");
  }
}

RowCalibration calibrate_row(std::span<const double> d2, double perplexity) {
  if (d2.empty()) throw ContractError("calibrate_row: empty row");
  if (std::all_of(d2.begin(), d2.end(), [](double x) { return x == 0.0; })) {
    throw ContractError("calibrate_row: all distances are zero");
  }
  const double dmin = *std::min_element(d2.begin(), d2.end());
  double mean_shift = 0.0;
  for (double d : d2) mean_shift += d - dmin;
  mean_shift /= static_cast<double>(d2.size());

  const double target = std::log(perplexity);
  double beta = mean_shift > 0.0 ? 1.0 / mean_shift : 1.0;
  double beta_lo = 0.0;
  double beta_hi = std::numeric_limits<double>::infinity();

  RowCalibration out;
  out.probabilities.resize(d2.size());
  double entropy = 0.0;
  double used_beta = beta;
  for (std::size_t step = 1; step <= kMaxCalibrationSteps; ++step) {
    out.steps = step;
    used_beta = beta;
    double sum = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < d2.size(); ++j) {
      const double shifted = d2[j] - dmin;
      const double pj = std::exp(-beta * shifted);
      out.probabilities[j] = pj;
      sum += pj;
      weighted += shifted * pj;
    }
    entropy = std::log(sum) + beta * weighted / sum;
    for (auto& pj : out.probabilities) pj /= sum;
    const double gap = (entropy - target) / std::log(2.0);
    if (std::abs(gap) < kLog2Tolerance) break;
    if (gap > 0.0) {
      beta_lo = beta;
      beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
    } else {
      beta_hi = beta;
      beta = 0.5 * (beta + beta_lo);
    }
  }
  out.perplexity = std::exp(entropy);
  out.sigma = std::sqrt(1.0 / (2.0 * used_beta));
  return out;
}

Matrix joint_probabilities(const Matrix& points, double perplexity, std::size_t threads) {
  const std::size_t n = points.rows();
  Matrix cond(n, n);
  detail::parallel_for(n, threads, [&](std::size_t i) {
    std::vector<double> d2;
    d2.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d2.push_back(squared_distance(points.row(i), points.row(j)));
    }
    RowCalibration row;
    try {
      row = calibrate_row(d2, perplexity);
    } catch (const ContractError& e) {
      throw ContractError("point " + std::to_string(i) + ": " + e.what());
    }
    for (std::size_t j = 0, k = 0; j < n; ++j) {
      if (j != i) cond(i, j) = row.probabilities[k++];
    }
  });
  Matrix p(n, n);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p(i, j) = (cond(i, j) + cond(j, i)) * scale;
  }
  return p;
}

double kl_divergence(const Matrix& p, const Matrix& coords) {
  return evaluate(p, coords, 1.0, 1).kl;
}

namespace {

// Orthonormalises the columns of q (d x c) in place, modified Gram-Schmidt.
// Columns that collapse (rank-deficient covariance) are refilled from rng.
void orthonormalize(Matrix& q, Rng& rng) {
  const std::size_t d = q.rows(), c = q.cols();
  for (std::size_t j = 0; j < c; ++j) {
    for (int attempt = 0;; ++attempt) {
      double before = 0.0;
      for (std::size_t r = 0; r < d; ++r) before += q(r, j) * q(r, j);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < j; ++i) {
          double dot = 0.0;
          for (std::size_t r = 0; r < d; ++r) dot += q(r, i) * q(r, j);
          for (std::size_t r = 0; r < d; ++r) q(r, j) -= dot * q(r, i);
        }
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < d; ++r) norm += q(r, j) * q(r, j);
      if (norm > 1e-20 * before && norm > 1e-300) {
        norm = std::sqrt(norm);
        for (std::size_t r = 0; r < d; ++r) q(r, j) /= norm;
        break;
      }
      if (attempt == 8) throw std::runtime_error("pca_reduce: could not complete orthonormal basis");
      for (std::size_t r = 0; r < d; ++r) q(r, j) = rng.normal();
    }
  }
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double v = a(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += v * b(k, j);
    }
  }
  return out;
}

// Cyclic Jacobi eigen-decomposition of a small symmetric matrix. Returns the
// eigenvectors as columns; `values` receives the eigenvalues.
Matrix jacobi_eigen(Matrix a, std::vector<double>& values) {
  const std::size_t n = a.rows();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
  return v;
}

}  // namespace

Matrix pca_reduce(const Matrix& points, std::size_t components) {
  const std::size_t n = points.rows(), d = points.cols();
  if (components == 0) throw ContractError("pca_reduce: components must be positive");
  Matrix centred = points;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += points(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centred(i, j) -= mean;
  }
  if (components >= d) return centred;

  Matrix cov(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = centred.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) cov(a, b) += r[a] * r[b];
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < a; ++b) cov(a, b) = cov(b, a);
  }

  // Oversampled block for faster separation of the leading subspace.
  const std::size_t block = std::min(d, components + 5);
  Rng rng(0x7063610000000000ULL);
  Matrix q(d, block);
  for (double& v : q.data()) v = rng.normal();
  orthonormalize(q, rng);
  std::vector<double> previous(block, 0.0), values;
  Matrix ritz;
  for (int iteration = 0; iteration < 1000; ++iteration) {
    q = multiply(cov, q);
    orthonormalize(q, rng);
    Matrix qt(block, d);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < block; ++c) qt(c, r) = q(r, c);
    }
    ritz = jacobi_eigen(multiply(qt, multiply(cov, q)), values);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double change = 0.0;
    for (std::size_t c = 0; c < components; ++c) {
      change = std::max(change, std::abs(sorted[c] - previous[c]) / std::max(std::abs(sorted[c]), 1e-300));
    }
    previous = sorted;
    if (change < 1e-13) break;
  }

  std::vector<std::size_t> order(block);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  const Matrix axes_all = multiply(q, ritz);
  Matrix axes(d, components);
  for (std::size_t c = 0; c < components; ++c) {
    std::size_t arg = 0;
    for (std::size_t r = 0; r < d; ++r) {
      if (std::abs(axes_all(r, order[c])) > std::abs(axes_all(arg, order[c]))) arg = r;
    }
    const double sign = axes_all(arg, order[c]) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d; ++r) axes(r, c) = sign * axes_all(r, order[c]);
  }
  return multiply(centred, axes);
}

Projection2D tsne(const Matrix& raw_points, const TsneConfig& config) {
  const std::size_t n = raw_points.rows();
  validate(config, n);
  const Matrix reduced = config.pca_components > 0 ? pca_reduce(raw_points, config.pca_components) : Matrix();
  const Matrix& points = config.pca_components > 0 ? reduced : raw_points;
  const Matrix p = joint_probabilities(points, config.perplexity, config.threads);

  Rng rng(config.seed);
  Matrix y(n, 2);
  for (auto& v : y.data()) v = rng.normal() * config.init_stddev;

  Matrix velocity(n, 2);
  Matrix gains(n, 2, 1.0);
  Projection2D out;
  const auto exaggeration_at = [&](std::size_t t) {
    return t < config.exaggeration_iterations ? config.early_exaggeration : 1.0;
  };

  Evaluation current = evaluate(p, y, exaggeration_at(0), config.threads);
  for (std::size_t t = 0; t < config.iterations; ++t) {
    if (t == config.exaggeration_iterations && t > 0) current = evaluate(p, y, 1.0, config.threads);
    if (!finite(current.grad)) throw ContractError("tsne: non-finite gradient at iteration " + std::to_string(t));
    out.kl_history.push_back(current.kl);

    const double momentum = t < config.momentum_switch ? config.initial_momentum : config.final_momentum;
    Matrix next = y;
    Matrix next_velocity = velocity;
    Matrix next_gains = gains;
    for (std::size_t i = 0; i < n * 2; ++i) {
      const double g = current.grad.data()[i];
      double& gain = next_gains.data()[i];
      double& u = next_velocity.data()[i];
      gain = ((g > 0.0) != (u > 0.0)) ? gain + 0.2 : gain * 0.8;
      gain = std::max(gain, 0.01);
      u = momentum * u - config.learning_rate * gain * g;
      next.data()[i] += u;
    }
    recentre(next);
    Evaluation candidate = evaluate(p, next, exaggeration_at(t + 1), config.threads);

    const bool guarded = config.monotone_kl && t >= config.exaggeration_iterations;
    if (guarded && !(candidate.kl <= current.kl)) {
      ++out.rejected_steps;
      std::fill(next_velocity.data().begin(), next_velocity.data().end(), 0.0);
      std::fill(next_gains.data().begin(), next_gains.data().end(), 1.0);
      double step = 0.5 * config.learning_rate;
      bool accepted = false;
      for (std::size_t r = 0; r < kMaxRetries && !accepted; ++r, step *= 0.5) {
        next = y;
        for (std::size_t i = 0; i < n * 2; ++i) next.data()[i] -= step * current.grad.data()[i];
        recentre(next);
        candidate = evaluate(p, next, 1.0, config.threads);
        accepted = candidate.kl <= current.kl;
      }
      if (!accepted) {
        next = y;
        candidate = std::move(current);
      }
    }
    y = std::move(next);
    velocity = std::move(next_velocity);
    gains = std::move(next_gains);
    current = std::move(candidate);
  }
  out.kl_history.push_back(current.kl);
  if (!finite(y)) throw ContractError("tsne: non-finite coordinates");
  out.coords = std::move(y);
  return out;
}

void write_projection_tsv(std::ostream& out, const Matrix& coords, std::span<const int> pattern_ids,
                          std::span<const int> cluster_ids, std::span<const std::int64_t> pair_ids) {
  const std::size_t n = coords.rows();
  if (pattern_ids.size() != n || cluster_ids.size() != n || pair_ids.size() != n) {
    throw ContractError("write_projection_tsv: column lengths differ");
  }
  out << "x\ty\tpattern_id\tcluster_id\tpair_id\n";
  out.precision(10);
  for (std::size_t i = 0; i < n; ++i) {
    out << coords(i, 0) << '\t' << coords(i, 1) << '\t' << pattern_ids[i] << '\t' << cluster_ids[i] << '\t'
        << pair_ids[i] << '\n';
  }
}

void write_scatter_svg(std::ostream& out, const Matrix& coords, std::span<const int> colour_key,
                       const std::string& title) {
  constexpr double kSize = 800.0;
  constexpr double kMargin = 40.0;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (coords.rows() > 0) {
    xmin = xmax = coords(0, 0);
    ymin = ymax = coords(0, 1);
    for (std::size_t i = 0; i < coords.rows(); ++i) {
      xmin = std::min(xmin, coords(i, 0));
      xmax = std::max(xmax, coords(i, 0));
      ymin = std::min(ymin, coords(i, 1));
      ymax = std::max(ymax, coords(i, 1));
    }
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  const double scale = (kSize - 2 * kMargin) / span;

  std::set<int> keys(colour_key.begin(), colour_key.end());
  std::vector<int> key_list(keys.begin(), keys.end());
  auto colour = [&](int key) {
    const auto idx = static_cast<std::size_t>(std::lower_bound(key_list.begin(), key_list.end(), key) - key_list.begin());
    const double hue = std::fmod(static_cast<double>(idx) * 137.508, 360.0);
    const int light = 35 + static_cast<int>(idx % 3) * 15;
    return "hsl(" + std::to_string(static_cast<int>(hue)) + ",70%," + std::to_string(light) + "%)";
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::string escaped;
  for (char c : title) {
    if (c == '<') escaped += "&lt;";
    else if (c == '>') escaped += "&gt;";
    else if (c == '&') escaped += "&amp;";
    else escaped += c;
  }
  out << "<text x=\"" << kMargin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << escaped << "</text>\n";
  out.precision(6);
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    const double x = kMargin + (coords(i, 0) - xmin) * scale;
    const double y = kSize - kMargin - (coords(i, 1) - ymin) * scale;
    const int key = i < colour_key.size() ? colour_key[i] : 0;
    out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"2.5\" fill=\"" << colour(key) << "\"><title>" << key
        << "</title></circle>\n";
  }
  out << "</svg>\n";
}

}  // namespace sentops
