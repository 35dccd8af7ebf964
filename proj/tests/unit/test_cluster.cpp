#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "sentops/cluster.hpp"
#include "sentops/embedding.hpp"
#include "sentops/error.hpp"
#include "sentops/operations.hpp"
#include "sentops/metrics.hpp"
#include "sentops/random.hpp"

using namespace sentops;

namespace {

Matrix column(std::initializer_list<double> values) {
  Matrix m;
  for (double v : values) m.append_row(std::vector<double>{v});
  return m;
}

KMeansOptions opts(std::size_t k, std::size_t restarts = 20, std::uint64_t seed = 0) {
  KMeansOptions o;
  o.k = k;
  o.restarts = restarts;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("coincident points split exactly") {
  Matrix m;
  for (int i = 0; i < 10; ++i) m.append_row(std::vector<double>{0, 0});
  for (int i = 0; i < 10; ++i) m.append_row(std::vector<double>{10, 10});
  const auto c = kmeans(m, opts(2));
  CHECK(c.total_inertia == 0.0);
  for (int i = 1; i < 10; ++i) CHECK(c.assignment[i] == c.assignment[0]);
  CHECK(c.assignment[10] != c.assignment[0]);
}

TEST_CASE("1-d four points") {
  const auto c = kmeans(column({0, 1, 9, 10}), opts(2));
  CHECK(c.total_inertia == doctest::Approx(1.0));
  std::vector<double> centres{c.centroids(0, 0), c.centroids(1, 0)};
  std::sort(centres.begin(), centres.end());
  CHECK(centres[0] == doctest::Approx(0.5));
  CHECK(centres[1] == doctest::Approx(9.5));
}

TEST_CASE("k = 1 gives the mean") {
  const auto m = fixtures::random_points(30, 3, 4);
  const auto c = kmeans(m, opts(1, 3));
  double total = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 30; ++i) mean += m(i, d) / 30.0;
    CHECK(c.centroids(0, d) == doctest::Approx(mean));
    for (std::size_t i = 0; i < 30; ++i) total += (m(i, d) - mean) * (m(i, d) - mean);
  }
  CHECK(c.total_inertia == doctest::Approx(total));
}

TEST_CASE("contract violations") {
  CHECK_THROWS_AS(kmeans(column({1, 1, 1}), opts(2)), ContractError);
  CHECK_THROWS_AS(kmeans(column({1, 2}), opts(0)), ContractError);
  CHECK_THROWS_AS(kmeans(column({1, 2}), opts(1, 0)), ContractError);
}

TEST_CASE("inertia history never increases") {
  Rng seeds(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = fixtures::random_points(20 + seeds.below(40), 1 + seeds.below(4), seeds.next_u64());
    const auto k = 1 + seeds.below(8);
    const auto run = kmeans_single(m, k, 300, 0.0, seeds.next_u64());
    for (std::size_t i = 1; i < run.inertia_history.size(); ++i) {
      CHECK(run.inertia_history[i] <= run.inertia_history[i - 1] * (1 + 1e-12) + 1e-12);
    }
    CHECK(recompute_inertia(m, run.clustering) == doctest::Approx(run.clustering.total_inertia));
  }
}

TEST_CASE("empty clusters are repaired") {
  // Far outlier pulls a centre away; every cluster must still own a point.
  const auto m = column({0, 0.1, 0.2, 0.3, 5, 5.1, 100});
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto run = kmeans_single(m, 4, 100, 0.0, s);
    std::set<int> used(run.clustering.assignment.begin(), run.clustering.assignment.end());
    CHECK(used.size() == 4);
  }
}

TEST_CASE("best restart is deterministic and independent of threads and point order") {
  std::vector<int> labels;
  const auto m = fixtures::blobs(6, 15, 4, 2.0, 0.8, 3, &labels);
  auto o = opts(6, 16, 42);
  o.threads = 1;
  const auto one = kmeans(m, o);
  o.threads = 4;
  const auto four = kmeans(m, o);
  CHECK(one.assignment == four.assignment);
  CHECK(one.total_inertia == four.total_inertia);
  CHECK(one.restart_inertia == four.restart_inertia);

  std::vector<std::size_t> perm(m.rows());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(8);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  Matrix shuffled;
  for (std::size_t i : perm) shuffled.append_row(m.row(i));
  const auto again = kmeans(shuffled, o);
  CHECK(again.total_inertia == one.total_inertia);
  std::vector<int> mapped(m.rows());
  for (std::size_t i = 0; i < perm.size(); ++i) mapped[perm[i]] = again.assignment[i];
  CHECK(adjusted_rand_index(one.assignment, mapped) == 1.0);

  CHECK(*std::min_element(one.restart_inertia.begin(), one.restart_inertia.end()) == one.total_inertia);
  CHECK(one.restart_inertia[one.best_restart] == one.total_inertia);
}

TEST_CASE("brute-force optimum on small 1-d inputs") {
  Rng rng(123);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 3 + rng.below(6);
    std::vector<double> xs(n);
    Matrix m;
    for (auto& x : xs) {
      x = static_cast<double>(rng.below(15));
      m.append_row(std::vector<double>{x});
    }
    const int k = 1 + static_cast<int>(rng.below(3));
    if (count_distinct_rows(m) < static_cast<std::size_t>(k)) continue;
    CHECK(kmeans(m, opts(k, 100, trial)).total_inertia == doctest::Approx(oracle::optimal_1d_inertia(xs, k)));
  }
}

TEST_CASE("pattern inertia") {
  Matrix m = column({0, 0, 1, 3});
  Clustering c;
  c.k = 1;
  c.assignment = {0, 0, 0, 0};
  c.centroids = column({0});
  // pattern 4 sits on its centre, pattern 2 has squared distances 1 and 9.
  const std::vector<int> patterns{4, 4, 2, 2};
  const auto r = pattern_inertia(m, patterns, c);
  REQUIRE(r.size() == 2);
  CHECK(r[0].pattern_id == 2);
  CHECK(r[0].value == doctest::Approx(5.0));
  CHECK(r[0].size == 2);
  CHECK(r[1].value == 0.0);

  Matrix two;
  two.append_row(std::vector<double>{1.0, 0.0});
  two.append_row(std::vector<double>{0.0, std::sqrt(3.0)});
  Clustering origin;
  origin.k = 1;
  origin.assignment = {0, 0};
  origin.centroids = Matrix(1, 2);
  CHECK(pattern_inertia(two, std::vector<int>{0, 0}, origin)[0].value == doctest::Approx(2.0));
}

TEST_CASE("high-noise pattern ranks first") {
  const auto groups = fixtures::planted_groups({30, 30, 30, 30});
  PlantedConfig cfg;
  cfg.dim = 16;
  cfg.group_noise_scale = {0.1, 0.1, 1.0, 0.1};
  const auto emb = synthesize_planted(groups, cfg);
  const auto space = build_operation_space(groups, emb, OperationKind::kSubtract);
  const auto m = space.to_matrix();
  const auto c = kmeans(m, opts(4));
  const auto r = pattern_inertia(m, space.pattern_labels(), c);
  CHECK(r[0].pattern_id == 2);

  CHECK(remove_noisy_patterns(groups, r, 0).size() == 4);
  const auto kept = remove_noisy_patterns(groups, r, 1);
  REQUIRE(kept.size() == 3);
  for (const auto& g : kept) CHECK(g.pattern != groups[2].pattern);
  CHECK(remove_noisy_patterns(groups, r, 3).size() == 1);
  CHECK_THROWS_AS(remove_noisy_patterns(groups, r, 4), ContractError);
}

TEST_CASE("select_k finds planted cluster counts") {
  const auto two = fixtures::blobs(2, 40, 3, 10.0, 0.3, 1);
  auto report = select_k(two, 2, 8, opts(2, 10));
  CHECK(report.best_k_davies_bouldin == 2);
  CHECK(report.best_k_silhouette == 2);
  CHECK(report.rows.size() == 7);

  const auto nine = fixtures::blobs(9, 20, 8, 5.0, 0.2, 2);
  report = select_k(nine, 2, 15, opts(2, 10));
  CHECK(report.best_k_davies_bouldin == 9);
  CHECK(report.best_k_silhouette == 9);
  CHECK(report.criteria_agree());

  CHECK_THROWS_AS(select_k(column({1, 1, 1, 1, 2}), 2, 3, opts(2)), ContractError);
}

TEST_CASE("clustering file round trip") {
  const auto m = fixtures::blobs(3, 5, 2, 4.0, 0.1, 5);
  const auto c = kmeans(m, opts(3, 4));
  std::stringstream io;
  write_clustering(io, c, "00000000deadbeef");
  const auto back = read_clustering(io);
  CHECK(back.config_hash == "00000000deadbeef");
  CHECK(back.clustering.assignment == c.assignment);
  CHECK(back.clustering.centroids == c.centroids);
  CHECK(back.clustering.total_inertia == c.total_inertia);
}
