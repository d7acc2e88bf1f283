/* Copyright 2026 the phmkit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phm/manifold.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace phm;

namespace {

Matrix random_points(Index n, Index dim, Rng& rng, Scalar scale = 1.0) {
  Matrix m(n, dim);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < dim; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

/// Two Gaussian blobs far apart, the standing benchmark for the reducer.
Matrix two_blobs(Index per_blob, Index dim, Rng& rng) {
  Matrix m(2 * per_blob, dim);
  for (Index r = 0; r < 2 * per_blob; ++r) {
    const Scalar offset = r < per_blob ? -8.0 : 8.0;
    for (Index c = 0; c < dim; ++c) {
      m(r, c) = (c == 0 ? offset : 0.0) + rng.normal();
    }
  }
  return m;
}

/// Plain double-loop k-NN used as the ground truth.
std::vector<std::vector<int>> knn_oracle(const Matrix& data, int k) {
  const Index n = data.rows();
  std::vector<std::vector<int>> result(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<Scalar, Index>> order;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      order.emplace_back((data.row(j) - data.row(i)).squaredNorm(), j);
    }
    std::sort(order.begin(), order.end());
    for (int c = 0; c < k; ++c) {
      result[static_cast<std::size_t>(i)].push_back(static_cast<int>(order[static_cast<std::size_t>(c)].second));
    }
  }
  return result;
}

}  // namespace

TEST_CASE("knn_graph finds exact neighbors") {
  SUBCASE("three collinear points") {
    Matrix data(3, 2);
    data << 0.0, 0.0, 1.0, 0.0, 2.0, 0.0;
    const auto graph = umap::knn_graph(data, 2);
    CHECK(graph.indices(1, 0) == 0);  // ties at distance 1 break to the lower index
    CHECK(graph.indices(1, 1) == 2);
    CHECK(graph.distances(1, 0) == 1.0);
    CHECK(graph.distances(1, 1) == 1.0);
    CHECK(graph.indices(0, 0) == 1);
    CHECK(graph.indices(0, 1) == 2);
  }
  SUBCASE("duplicated point appears first at distance zero") {
    Matrix data(4, 2);
    data << 5.0, 5.0, 1.0, 1.0, 5.0, 5.0, 9.0, 0.0;
    const auto graph = umap::knn_graph(data, 2);
    CHECK(graph.indices(0, 0) == 2);
    CHECK(graph.distances(0, 0) == 0.0);
    CHECK(graph.indices(2, 0) == 0);
  }
  SUBCASE("matches the quadratic-scan oracle exactly on random data") {
    Rng rng(6);
    const Matrix data = random_points(50, 3, rng);
    const auto graph = umap::knn_graph(data, 7);
    const auto expected = knn_oracle(data, 7);
    for (Index i = 0; i < 50; ++i) {
      for (int c = 0; c < 7; ++c) {
        CHECK(graph.indices(i, c) == expected[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
      }
      for (int c = 1; c < 7; ++c) CHECK(graph.distances(i, c) >= graph.distances(i, c - 1));
    }
  }
  SUBCASE("contract violations") {
    Rng rng(1);
    const Matrix data = random_points(5, 2, rng);
    CHECK_THROWS(umap::knn_graph(data, 5));
    CHECK_THROWS(umap::knn_graph(data, 1));
  }
}

TEST_CASE("smooth_knn calibrates the local bandwidth") {
  SUBCASE("hits the log2(k) mass within 1e-5 on random data") {
    Rng rng(14);
    const Matrix data = random_points(60, 4, rng, 3.0);
    auto graph = umap::knn_graph(data, 4);
    umap::smooth_knn(graph);
    for (Index i = 0; i < data.rows(); ++i) {
      Scalar mass = 0.0;
      for (int c = 0; c < 4; ++c) {
        const Scalar gap = graph.distances(i, c) - graph.rho(i);
        mass += gap > 0.0 ? std::exp(-gap / graph.sigma(i)) : 1.0;
      }
      CHECK(mass == doctest::Approx(2.0).epsilon(1e-4));  // log2(4) = 2, search tol 1e-5
      CHECK(graph.sigma(i) > 0.0);
      CHECK(graph.rho(i) >= 0.0);
    }
  }
  SUBCASE("scaling all distances by 10 scales sigma by 10") {
    Rng rng(15);
    const Matrix data = random_points(40, 3, rng);
    auto graph = umap::knn_graph(data, 6);
    umap::smooth_knn(graph);
    auto scaled = umap::knn_graph(Matrix(10.0 * data), 6);
    umap::smooth_knn(scaled);
    for (Index i = 0; i < 40; ++i) {
      CHECK(scaled.rho(i) == doctest::Approx(10.0 * graph.rho(i)).epsilon(1e-9));
      CHECK(scaled.sigma(i) == doctest::Approx(10.0 * graph.sigma(i)).epsilon(1e-3));
    }
  }
  SUBCASE("all neighbors exactly at rho clamp sigma to the floor") {
    // unit square: each corner has two neighbors at distance 1
    Matrix data(4, 2);
    data << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    auto graph = umap::knn_graph(data, 2);
    umap::smooth_knn(graph);
    for (Index i = 0; i < 4; ++i) {
      CHECK(graph.sigma(i) > 0.0);
      CHECK(graph.sigma(i) <= 1e-2);  // the floor, far below the data scale
    }
  }
}

TEST_CASE("fuzzy_union applies the probabilistic t-conorm") {
  // hand-built two-point directed graphs
  umap::NeighborGraph graph;
  graph.indices.resize(3, 2);
  graph.distances.resize(3, 2);
  graph.indices << 1, 2, 0, 2, 0, 1;
  graph.distances << 1.0, 3.0, 1.0, 1.5, 3.0, 1.5;
  graph.rho.resize(3);
  graph.sigma.resize(3);
  graph.rho << 1.0, 1.0, 1.5;
  // sigma chosen so exp(-gap/sigma) gives .5 where gap = sigma * ln 2
  const Scalar ln2 = std::log(2.0);
  graph.sigma << 2.0 / ln2, 0.5 / ln2, 1.5 / ln2;

  const auto fuzzy = umap::fuzzy_union(graph);
  // edge (0,1): w01 = exp(0) = 1 (d = rho), w10 = exp(0) = 1 -> union 1
  CHECK(fuzzy.coeff(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  // edge (1,2): w12 = exp(-0.5/sigma1) = 0.5, w21 = exp(0) = 1 -> union 1
  CHECK(fuzzy.coeff(1, 2) == doctest::Approx(1.0).epsilon(1e-12));
  // edge (0,2): w02 = exp(-2/sigma0) = 0.5, w20 = exp(-1.5/sigma2) = 0.5
  CHECK(fuzzy.coeff(0, 2) == doctest::Approx(0.75).epsilon(1e-12));

  SUBCASE("one-sided membership passes through") {
    // 0.5 + 0 - 0 = 0.5
    CHECK(0.5 + 0.0 - 0.5 * 0.0 == 0.5);
  }
  SUBCASE("result is exactly symmetric with unit diagonal absent") {
    Rng rng(33);
    const Matrix data = random_points(80, 5, rng);
    auto g = umap::knn_graph(data, 8);
    umap::smooth_knn(g);
    const auto u = umap::fuzzy_union(g);
    umap::SparseGraph diff = umap::SparseGraph(u.transpose()) - u;
    const Scalar asymmetry = diff.nonZeros() > 0 ? diff.coeffs().cwiseAbs().maxCoeff() : 0.0;
    CHECK(asymmetry == 0.0);
    for (int k = 0; k < u.outerSize(); ++k) {
      for (umap::SparseGraph::InnerIterator it(u, k); it; ++it) {
        CHECK(it.row() != it.col());
        CHECK(it.value() > 0.0);
        CHECK(it.value() <= 1.0);
      }
    }
  }
}

TEST_CASE("fit_curve reproduces the canonical min_dist parameters") {
  const auto [a, b] = umap::fit_curve(0.1);
  // published fit for min_dist 0.1, spread 1.0
  CHECK(a == doctest::Approx(1.577).epsilon(0.05));
  CHECK(b == doctest::Approx(0.8951).epsilon(0.05));

  SUBCASE("fit residual is small over the sampled range") {
    Scalar worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const Scalar x = 3.0 * i / 100.0;
      const Scalar target = x < 0.1 ? 1.0 : std::exp(-(x - 0.1));
      const Scalar fit = 1.0 / (1.0 + a * std::pow(x, 2.0 * b));
      worst = std::max(worst, std::abs(fit - target));
    }
    CHECK(worst < 0.08);
  }
}

TEST_CASE("embed separates the two-blob benchmark") {
  Rng rng(70);
  const Matrix data = two_blobs(100, 10, rng);
  umap::UmapConfig config;
  config.n_neighbors = 15;
  config.epochs = 200;
  config.seed = 9;
  const Matrix embedding = umap::reduce_to_2d(data, config);
  REQUIRE(embedding.rows() == 200);
  CHECK(embedding.allFinite());

  const RowVector c1 = embedding.topRows(100).colwise().mean();
  const RowVector c2 = embedding.bottomRows(100).colwise().mean();
  Scalar spread = 0.0;
  for (Index i = 0; i < 100; ++i) {
    spread += (embedding.row(i) - c1).norm();
    spread += (embedding.row(100 + i) - c2).norm();
  }
  spread /= 200.0;
  CHECK((c1 - c2).norm() >= 3.0 * spread);

  SUBCASE("neighborhoods beat a seeded random embedding by 3x") {
    const Scalar score = umap::neighborhood_overlap(data, embedding, 15);
    Rng noise(1234);
    const Matrix random_layout = random_points(200, 2, noise, 10.0);
    const Scalar baseline = umap::neighborhood_overlap(data, random_layout, 15);
    CHECK(score >= 3.0 * baseline);
  }
}

TEST_CASE("embed is deterministic and total") {
  Rng rng(77);
  const Matrix data = random_points(60, 6, rng);
  umap::UmapConfig config;
  config.n_neighbors = 8;
  config.epochs = 50;
  config.seed = 123;

  const Matrix a = umap::reduce_to_2d(data, config);
  const Matrix b = umap::reduce_to_2d(data, config);
  CHECK(a == b);  // bitwise

  config.seed = 124;
  const Matrix c = umap::reduce_to_2d(data, config);
  CHECK(a != c);

  SUBCASE("three points embed to something finite") {
    Matrix tiny(3, 2);
    tiny << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0;
    umap::UmapConfig small;
    small.n_neighbors = 2;
    small.epochs = 20;
    const Matrix e = umap::reduce_to_2d(tiny, small);
    CHECK(e.rows() == 3);
    CHECK(e.allFinite());
  }
  SUBCASE("isolated rows land near the origin") {
    umap::SparseGraph lonely(5, 5);
    std::vector<Eigen::Triplet<Scalar>> t = {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 0.7}, {2, 1, 0.7}};
    lonely.setFromTriplets(t.begin(), t.end());
    umap::UmapConfig small;
    small.epochs = 10;
    const Matrix e = umap::embed(lonely, small);
    CHECK(e.allFinite());
    CHECK(e.row(4).norm() < 1.0);  // isolated, jittered around the origin
  }
}

TEST_CASE("embedding export writes row ids and coordinates") {
  const auto dir = test::temp_dir("manifold");
  Matrix embedding(2, 2);
  embedding << 0.25, -1.5, 3.0, 4.0;
  umap::write_embedding_csv(embedding, {10, 42}, (dir / "e.csv").string());
  CHECK(test::read_all((dir / "e.csv").string()) == "row,u1,u2\n10,0.25,-1.5\n42,3,4\n");
}
