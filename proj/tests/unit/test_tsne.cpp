#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "sentops/error.hpp"
#include "sentops/random.hpp"
#include "sentops/tsne.hpp"

using namespace sentops;

namespace {

double perplexity_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0) h -= v * std::log2(v);
  }
  return std::exp2(h);
}

TsneConfig quick(std::size_t iterations = 300) {
  TsneConfig c;
  c.perplexity = 5.0;
  c.iterations = iterations;
  c.exaggeration_iterations = 100;
  c.momentum_switch = 100;
  c.seed = 1;
  return c;
}

}  // namespace

TEST_CASE("row calibration") {
  auto r = calibrate_row(std::vector<double>{4.0, 4.0}, 2.0);
  CHECK(r.probabilities[0] == doctest::Approx(0.5));
  CHECK(r.probabilities[1] == doctest::Approx(0.5));

  r = calibrate_row(std::vector<double>{1.0, 10000.0}, 1.01);
  CHECK(r.probabilities[0] > 0.99);

  Rng rng(3);
  std::vector<double> d(10);
  for (auto& v : d) v = 10.0 * rng.uniform();
  r = calibrate_row(d, 4.0);
  CHECK(std::abs(perplexity_of(r.probabilities) - 4.0) < 1e-4);
  CHECK(r.perplexity == doctest::Approx(perplexity_of(r.probabilities)));

  CHECK_THROWS_AS(calibrate_row(std::vector<double>{0.0, 0.0, 0.0}, 2.0), ContractError);
}

TEST_CASE("joint probabilities are a symmetric distribution") {
  const auto m = fixtures::random_points(40, 5, 7);
  const auto p = joint_probabilities(m, 8.0);
  double total = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(p(i, i) == 0.0);
    for (std::size_t j = 0; j < 40; ++j) {
      CHECK(p(i, j) >= 0.0);
      CHECK(p(i, j) == p(j, i));
      total += p(i, j);
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(joint_probabilities(m, 8.0, 1) == joint_probabilities(m, 8.0, 3));
}

TEST_CASE("config validation") {
  const auto m = fixtures::random_points(12, 2, 1);
  TsneConfig c;
  c.perplexity = 4.0;  // must stay below n / 3
  CHECK_THROWS_AS(tsne(m, c), ContractError);
  c.perplexity = 1.0;
  CHECK_THROWS_AS(tsne(m, c), ContractError);
  CHECK_THROWS_AS(tsne(fixtures::random_points(3, 2, 1), quick()), ContractError);
  Matrix same(20, 3, 1.0);
  CHECK_THROWS_AS(tsne(same, quick()), ContractError);
}

TEST_CASE("deterministic given seed and independent of threads") {
  const auto m = fixtures::random_points(60, 4, 2);
  auto c = quick(200);
  c.threads = 1;
  const auto a = tsne(m, c);
  c.threads = 4;
  const auto b = tsne(m, c);
  CHECK(a.coords == b.coords);
  CHECK(a.kl_history == b.kl_history);
  CHECK(a.kl_history.size() == 201);
  c.seed = 2;
  CHECK_FALSE(tsne(m, c).coords == a.coords);
}

TEST_CASE("kl is finite and non-increasing after exaggeration") {
  std::vector<int> labels;
  const auto m = fixtures::blobs(3, 30, 10, 3.0, 1.0, 4, &labels);
  const auto c = quick(400);
  const auto r = tsne(m, c);
  for (double kl : r.kl_history) CHECK(std::isfinite(kl));
  for (std::size_t i = c.exaggeration_iterations + 1; i < r.kl_history.size(); ++i) {
    CHECK(r.kl_history[i] <= r.kl_history[i - 1] + 1e-6);
  }
  CHECK(r.kl_history.back() == doctest::Approx(kl_divergence(joint_probabilities(m, c.perplexity), r.coords)));
}

TEST_CASE("two separated groups become linearly separable") {
  std::vector<int> labels;
  const auto m = fixtures::blobs(2, 40, 8, 6.0, 0.5, 9, &labels);
  const auto r = tsne(m, quick(500));
  std::vector<double> xy(r.coords.data().begin(), r.coords.data().end());
  CHECK(oracle::linear_separability(xy, labels) == 1.0);
}

TEST_CASE("four corners of a square keep their distance order") {
  Matrix sq;
  for (auto [x, y] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}) sq.append_row(std::vector<double>{x, y});
  auto c = quick(500);
  c.perplexity = 1.2;
  const auto r = tsne(sq, c);
  const auto d = [&](std::size_t i, std::size_t j) { return euclidean_distance(r.coords.row(i), r.coords.row(j)); };
  // Every side is shorter than either diagonal.
  const double longest_side = std::max({d(0, 1), d(1, 2), d(2, 3), d(3, 0)});
  CHECK(longest_side < std::min(d(0, 2), d(1, 3)));
}

TEST_CASE("rotation of the input leaves the trajectory unchanged") {
  const auto m = fixtures::random_points(30, 2, 12);
  // A quarter turn keeps every squared distance bit-identical.
  Matrix quarter(30, 2);
  for (std::size_t i = 0; i < 30; ++i) {
    quarter(i, 0) = -m(i, 1);
    quarter(i, 1) = m(i, 0);
  }
  const auto a = tsne(m, quick(150));
  const auto b = tsne(quarter, quick(150));
  CHECK(a.kl_history == b.kl_history);
  CHECK(a.coords == b.coords);

  // A generic angle perturbs distances in the last bits; the trajectories
  // agree until rounding differences are amplified.
  Matrix rotated(30, 2);
  const double th = 0.7;
  for (std::size_t i = 0; i < 30; ++i) {
    rotated(i, 0) = std::cos(th) * m(i, 0) - std::sin(th) * m(i, 1);
    rotated(i, 1) = std::sin(th) * m(i, 0) + std::cos(th) * m(i, 1);
  }
  const auto c = tsne(rotated, quick(150));
  for (std::size_t i = 0; i < 10; ++i) CHECK(c.kl_history[i] == doctest::Approx(a.kl_history[i]).epsilon(1e-10));
}

TEST_CASE("projection tsv and svg") {
  Matrix coords;
  coords.append_row(std::vector<double>{0.5, -1});
  coords.append_row(std::vector<double>{2, 3});
  std::ostringstream tsv;
  write_projection_tsv(tsv, coords, std::vector<int>{1, 2}, std::vector<int>{0, 0}, std::vector<std::int64_t>{10, 11});
  CHECK(tsv.str().rfind("x\ty\tpattern_id\tcluster_id\tpair_id\n", 0) == 0);
  CHECK(tsv.str().find("\t1\t0\t10\n") != std::string::npos);
  std::ostringstream svg;
  write_scatter_svg(svg, coords, std::vector<int>{1, 2}, "t <&>");
  CHECK(svg.str().rfind("<svg", 0) == 0);
  CHECK(svg.str().find("&lt;&amp;&gt;") != std::string::npos);
  CHECK(svg.str().find("<circle") != std::string::npos);
}

TEST_CASE("pca keeps distances of data lying in a plane") {
  Rng rng(21);
  // Two orthonormal directions in 5-d.
  const double u[5] = {0.6, 0.8, 0.0, 0.0, 0.0};
  const double v[5] = {0.0, 0.0, 0.6, 0.0, 0.8};
  Matrix m(40, 5);
  for (std::size_t i = 0; i < 40; ++i) {
    const double a = 3.0 * rng.normal(), b = rng.normal();
    for (std::size_t d = 0; d < 5; ++d) m(i, d) = 1.0 + a * u[d] + b * v[d];
  }
  const auto r = pca_reduce(m, 2);
  REQUIRE(r.cols() == 2);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = i + 1; j < 40; ++j) {
      CHECK(squared_distance(r.row(i), r.row(j)) == doctest::Approx(squared_distance(m.row(i), m.row(j))).epsilon(1e-9));
    }
  }
  double var0 = 0, var1 = 0, cov = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    var0 += r(i, 0) * r(i, 0);
    var1 += r(i, 1) * r(i, 1);
    cov += r(i, 0) * r(i, 1);
  }
  CHECK(var0 >= var1);
  CHECK(std::abs(cov) < 1e-8 * var0);
  CHECK(pca_reduce(m, 5).cols() == 5);
  CHECK_THROWS_AS(pca_reduce(m, 0), ContractError);
}

TEST_CASE("pca pre-reduction feeds the projection") {
  std::vector<int> labels;
  const auto m = fixtures::blobs(2, 40, 8, 6.0, 0.5, 9, &labels);
  auto c = quick(500);
  c.pca_components = 3;
  const auto r = tsne(m, c);
  std::vector<double> xy(r.coords.data().begin(), r.coords.data().end());
  CHECK(oracle::linear_separability(xy, labels) == 1.0);

  auto plain = quick(500);
  const auto direct = tsne(pca_reduce(m, 3), plain);
  CHECK(direct.kl_history == r.kl_history);
}
