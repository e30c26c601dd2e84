#include "helpers.hpp"

#include "sdpkm/dataset.hpp"
#include "sdpkm/kmeans.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace sdpkm;
using sdpkm::test::random_data;
using sdpkm::test::random_labels;
using sdpkm::test::scatter;

namespace {

DataSet line(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index j = 0;
  for (double x : xs) m(0, j++) = x;
  return DataSet(m);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("load_dataset derives gram and sqdist") {
  const DataSet ds = line({0.0, 2.0});
  CHECK(ds.sqdist().isApprox((Eigen::Matrix2d() << 0, 4, 4, 0).finished()));
  CHECK(ds.gram().isApprox((Eigen::Matrix2d() << 0, 0, 0, 4).finished()));

  Eigen::MatrixXd one(3, 1);
  one << 1, 2, 2;
  const DataSet single(one);
  CHECK(single.sqdist()(0, 0) == 0.0);
  CHECK(single.gram()(0, 0) == doctest::Approx(9.0));

  Rng rng(1);
  const DataSet r = random_data(rng, 3, 5);
  for (int p = 0; p < 5; ++p) {
    for (int q = 0; q < 5; ++q) {
      CHECK(r.sqdist()(p, q) ==
            doctest::Approx(r.gram()(p, p) + r.gram()(q, q) - 2 * r.gram()(p, q)).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-finite entries are rejected with their position") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
  m(1, 2) = std::numeric_limits<double>::quiet_NaN();
  try {
    DataSet ds(m);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("point 2") != std::string::npos);
    CHECK(msg.find("feature 1") != std::string::npos);
  }
}

TEST_CASE("CSV round trip and malformed input") {
  Rng rng(2);
  const DataSet ds = random_data(rng, 3, 4);
  const DataSet back = parse_csv(format_csv(ds));
  CHECK((back.points() - ds.points()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(parse_csv("1,2\n3\n"), DataError);
  CHECK_THROWS_AS(parse_csv("1,abc\n"), DataError);
  CHECK_THROWS_AS(parse_csv(""), DataError);
}

TEST_CASE("kmeans_objective examples") {
  CHECK(kmeans_objective(line({0, 2}), Assignment({0, 0}, 1)) == doctest::Approx(2.0));
  CHECK(kmeans_objective(line({0, 1, 9}), Assignment({0, 0, 1}, 2)) == doctest::Approx(0.5));
  Rng rng(3);
  const DataSet ds = random_data(rng, 2, 6);
  CHECK(kmeans_objective(ds, Assignment({0, 1, 2, 3, 4, 5}, 6)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(Assignment({0, 0, 0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Assignment({0, 3, 1}, 2), std::invalid_argument);
}

TEST_CASE("objective identity: centroid, Gram and distance forms agree") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(15));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, 5))));
    const DataSet ds = random_data(rng, 1 + static_cast<int>(rng.below(5)), n, 1.0 + 5 * rng.uniform());
    const auto labels = random_labels(rng, n, k);
    const Assignment a(labels, k);
    const double ref = scatter(ds, labels, k);
    CHECK(rel(kmeans_objective(ds, a), ref) < 1e-9);
    CHECK(rel(kmeans_objective_gram(ds, a), ref) < 1e-9);
    const Eigen::MatrixXd y = partition_matrix(a);
    CHECK(rel(gram_form(ds, y), ref) < 1e-9);
    CHECK(rel(distance_form(ds, y), ref) < 1e-9);
  }
}

TEST_CASE("distance form equals Gram form on doubly stochastic Y") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(12));
    const DataSet ds = random_data(rng, 3, n);
    // Sinkhorn balancing of a random positive symmetric matrix.
    Eigen::MatrixXd y(n, n);
    for (int p = 0; p < n; ++p) {
      for (int q = p; q < n; ++q) y(p, q) = y(q, p) = 0.1 + rng.uniform();
    }
    for (int it = 0; it < 2000; ++it) {
      const Eigen::VectorXd d = y.rowwise().sum().cwiseSqrt().cwiseInverse();
      y = d.asDiagonal() * y * d.asDiagonal();
    }
    REQUIRE((y.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(rel(gram_form(ds, y), distance_form(ds, y)) < 1e-8);
  }
}

TEST_CASE("Stiefel factor examples and round trip") {
  const StiefelFactor one = assignment_to_stiefel(Assignment({0, 0}, 1));
  CHECK(one.u(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(one.u(1, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(assignment_to_stiefel(Assignment({0, 1, 2}, 3)).u.isApprox(Eigen::MatrixXd::Identity(3, 3)));

  const Assignment a({0, 0, 1}, 2);
  const StiefelFactor f = assignment_to_stiefel(a);
  Eigen::MatrixXd expect(3, 2);
  expect << 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0), 0, 0, 1;
  CHECK(f.u.isApprox(expect));
  CHECK(stiefel_to_assignment(f).same_partition(a));
  CHECK(stiefel_to_assignment({Eigen::MatrixXd::Identity(3, 3)}).same_partition(Assignment({0, 1, 2}, 3)));

  // Objective through U: tr(X^T X) - sum_i u_i^T X^T X u_i.
  Rng rng(6);
  const DataSet ds = random_data(rng, 2, 3);
  const double via_u = ds.gram_trace() - (f.u.transpose() * ds.gram() * f.u).trace();
  CHECK(rel(via_u, kmeans_objective(ds, a)) < 1e-9);

  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(20));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, 4))));
    const Assignment b(random_labels(rng, n, k), k);
    const StiefelFactor g = assignment_to_stiefel(b);
    CHECK((g.u.transpose() * g.u - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.u.minCoeff() >= 0.0);
    CHECK(((g.u * g.u.transpose()).rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(stiefel_to_assignment(g).same_partition(b));
  }
}

TEST_CASE("stiefel_to_assignment names the violated constraint") {
  Eigen::MatrixXd u(2, 1);
  u << 1, 0;
  try {
    stiefel_to_assignment({u});
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("row-sum") != std::string::npos);
  }
  u << -0.5, 1;
  CHECK_THROWS_WITH_AS(stiefel_to_assignment({u}), doctest::Contains("nonnegativity"),
                       std::invalid_argument);
  Eigen::MatrixXd v(2, 2);
  v << 1, 1, 0, 0;
  CHECK_THROWS_WITH_AS(stiefel_to_assignment({v}), doctest::Contains("orthonormality"),
                       std::invalid_argument);
}

TEST_CASE("lloyd_step examples") {
  const DataSet ds = line({0, 1, 9});
  CHECK(lloyd_step(ds, Assignment({0, 1, 1}, 2)).same_partition(Assignment({0, 0, 1}, 2)));
  const DataSet far = line({0, 100, 200});
  const Assignment single({0, 1, 2}, 3);
  CHECK(lloyd_step(far, single) == single);
}

TEST_CASE("lloyd_step never increases the objective") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(25));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, 5))));
    const DataSet ds = random_data(rng, 2, n);
    const Assignment a(random_labels(rng, n, k), k);
    const Assignment b = lloyd_step(ds, a);
    CHECK(b.k() == k);
    CHECK(kmeans_objective(ds, b) <= kmeans_objective(ds, a) + 1e-9);
  }
}

TEST_CASE("lloyd_step repairs empty clusters") {
  // Both centroids coincide, so nearest-center assigns everything to 0.
  const DataSet ds = line({0, 2, 0, 2});
  const Assignment b = lloyd_step(ds, Assignment({0, 0, 1, 1}, 2));
  CHECK(b.cluster_sizes()[0] >= 1);
  CHECK(b.cluster_sizes()[1] >= 1);
}

TEST_CASE("lloyd_full") {
  Rng rng(8);
  const DataSet ds = random_data(rng, 2, 12);
  const Assignment all = lloyd_full(ds, 1, 0);
  CHECK(kmeans_objective(ds, all) == doctest::Approx(scatter(ds, std::vector<int>(12, 0), 1)));
  CHECK(kmeans_objective(ds, lloyd_full(ds, 12, 5)) == doctest::Approx(0.0));
  CHECK(lloyd_full(ds, 3, 42) == lloyd_full(ds, 3, 42));
  CHECK_THROWS_AS(lloyd_full(ds, 13, 0), std::invalid_argument);

  const DataSet small = line({0, 1, 9});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CHECK(kmeans_objective(small, lloyd_full(small, 2, seed)) >= 0.5 - 1e-12);
  }
}

TEST_CASE("nearest_center ties go to the smallest index") {
  const DataSet ds = line({1});
  Eigen::MatrixXd c(1, 2);
  c << 0, 2;
  CHECK(nearest_center(ds, c) == std::vector<int>{0});
}

TEST_CASE("Assignment canonical form") {
  const Assignment a({2, 0, 2, 1}, 3);
  CHECK(a.canonical().labels() == std::vector<int>{0, 1, 0, 2});
  CHECK(a.same_partition(Assignment({0, 1, 0, 2}, 3)));
  CHECK_FALSE(a.same_partition(Assignment({0, 1, 2, 2}, 3)));
}
