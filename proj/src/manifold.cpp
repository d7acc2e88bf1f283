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
#include "phm/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

namespace phm::umap {

namespace {

constexpr Scalar kSmoothTolerance = 1e-5;
constexpr int kSmoothIterations = 64;
constexpr Scalar kGradientClip = 4.0;

Scalar clip(Scalar x) { return std::clamp(x, -kGradientClip, kGradientClip); }

/// Knuth MMIX linear congruential stream; keeps negative sampling seeded and
/// platform independent.
struct Lcg {
  std::uint64_t state;
  explicit Lcg(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state >> 16;
  }
};

}  // namespace

NeighborGraph knn_graph(const Matrix& data, int k) {
  const Index n = data.rows();
  if (k < 2) throw std::invalid_argument("knn_graph: k must be >= 2");
  if (n <= k) throw std::invalid_argument("knn_graph: need more rows than neighbors");

  NeighborGraph graph;
  graph.indices.resize(n, k);
  graph.distances.resize(n, k);

  parallel_for(n, [&](Index i) {
    thread_local std::vector<std::pair<Scalar, Index>> order;
    order.clear();
    order.reserve(static_cast<std::size_t>(n) - 1);
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      order.emplace_back((data.row(j) - data.row(i)).squaredNorm(), j);
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end());
    for (int c = 0; c < k; ++c) {
      graph.indices(i, c) = static_cast<int>(order[static_cast<std::size_t>(c)].second);
      graph.distances(i, c) = std::sqrt(order[static_cast<std::size_t>(c)].first);
    }
  });
  return graph;
}

void smooth_knn(NeighborGraph& graph, Scalar target) {
  const Index n = graph.rows();
  const int k = graph.neighbors();
  if (target <= 0.0) target = std::log2(static_cast<Scalar>(k));
  graph.rho.resize(n);
  graph.sigma.resize(n);

  for (Index i = 0; i < n; ++i) {
    Scalar rho = 0.0;
    for (int c = 0; c < k; ++c) {
      if (graph.distances(i, c) > 0.0) {
        rho = graph.distances(i, c);
        break;
      }
    }
    graph.rho(i) = rho;

    auto mass = [&](Scalar sigma) {
      Scalar sum = 0.0;
      for (int c = 0; c < k; ++c) {
        const Scalar gap = graph.distances(i, c) - rho;
        sum += gap > 0.0 ? std::exp(-gap / sigma) : 1.0;
      }
      return sum;
    };

    const Scalar floor = std::max(1e-8, 1e-3 * graph.distances.row(i).mean());
    // every neighbor at or inside rho: the sum is k for any sigma
    if (mass(floor) >= target) {
      graph.sigma(i) = floor;
      continue;
    }
    Scalar lo = 0.0;
    Scalar hi = 1.0;
    while (mass(hi) < target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12) break;
    }
    Scalar sigma = hi;
    for (int it = 0; it < kSmoothIterations; ++it) {
      sigma = 0.5 * (lo + hi);
      const Scalar m = mass(sigma);
      if (std::abs(m - target) <= kSmoothTolerance) break;
      if (m > target) {
        hi = sigma;
      } else {
        lo = sigma;
      }
    }
    graph.sigma(i) = std::max(sigma, floor);
  }
}

SparseGraph fuzzy_union(const NeighborGraph& graph) {
  if (graph.sigma.size() != graph.rows()) {
    throw std::invalid_argument("fuzzy_union: run smooth_knn first");
  }
  const Index n = graph.rows();
  const int k = graph.neighbors();

  // directed membership strengths, keyed for symmetric pairing
  std::map<std::pair<Index, Index>, std::pair<Scalar, Scalar>> pairs;
  for (Index i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      const Index j = graph.indices(i, c);
      if (j == i) continue;
      const Scalar gap = graph.distances(i, c) - graph.rho(i);
      const Scalar w = gap > 0.0 ? std::exp(-gap / graph.sigma(i)) : 1.0;
      const bool flipped = j < i;
      const auto key = flipped ? std::make_pair(j, i) : std::make_pair(i, j);
      auto& slot = pairs[key];
      (flipped ? slot.second : slot.first) = w;
    }
  }

  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(pairs.size() * 2);
  for (const auto& [key, w] : pairs) {
    const Scalar u = w.first + w.second - w.first * w.second;
    if (u <= 0.0) continue;
    triplets.emplace_back(static_cast<int>(key.first), static_cast<int>(key.second), u);
    triplets.emplace_back(static_cast<int>(key.second), static_cast<int>(key.first), u);
  }
  SparseGraph result(n, n);
  result.setFromTriplets(triplets.begin(), triplets.end());
  result.makeCompressed();
  return result;
}

std::pair<Scalar, Scalar> fit_curve(Scalar min_dist, Scalar spread) {
  if (!(min_dist > 0.0) || !(spread > 0.0)) {
    throw std::invalid_argument("fit_curve: min_dist and spread must be positive");
  }
  constexpr int kSamples = 300;
  Vector x(kSamples), y(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    x(i) = 3.0 * spread * static_cast<Scalar>(i) / (kSamples - 1);
    y(i) = x(i) < min_dist ? 1.0 : std::exp(-(x(i) - min_dist) / spread);
  }

  // Levenberg-Marquardt on f(x) = 1 / (1 + a x^(2b))
  Scalar a = 1.0, b = 1.0, lambda = 1e-3;
  auto residuals = [&](Scalar pa, Scalar pb, Vector& r) {
    for (int i = 0; i < kSamples; ++i) {
      const Scalar p = x(i) > 0.0 ? std::pow(x(i), 2.0 * pb) : 0.0;
      r(i) = 1.0 / (1.0 + pa * p) - y(i);
    }
  };
  Vector r(kSamples), r_try(kSamples);
  residuals(a, b, r);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 2> jac(kSamples, 2);
    for (int i = 0; i < kSamples; ++i) {
      if (x(i) <= 0.0) {
        jac(i, 0) = jac(i, 1) = 0.0;
        continue;
      }
      const Scalar p = std::pow(x(i), 2.0 * b);
      const Scalar denom = 1.0 + a * p;
      jac(i, 0) = -p / (denom * denom);
      jac(i, 1) = -2.0 * a * p * std::log(x(i)) / (denom * denom);
    }
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d jtr = jac.transpose() * r;
    Eigen::Matrix2d damped = jtj;
    damped(0, 0) += lambda * jtj(0, 0);
    damped(1, 1) += lambda * jtj(1, 1);
    const Eigen::Vector2d step = damped.ldlt().solve(-jtr);
    const Scalar a_try = a + step(0);
    const Scalar b_try = b + step(1);
    if (!(a_try > 0.0) || !(b_try > 0.0)) {
      lambda *= 10.0;
      continue;
    }
    residuals(a_try, b_try, r_try);
    if (r_try.squaredNorm() < r.squaredNorm()) {
      a = a_try;
      b = b_try;
      r = r_try;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (step.norm() < 1e-12) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

namespace {

Matrix spectral_init(const SparseGraph& graph, Rng& rng) {
  const Index n = graph.rows();
  Matrix coords(n, 2);

  const Vector degree = Vector(graph * Vector::Ones(n));
  if (degree.maxCoeff() <= 0.0) {
    // no edges at all: seeded random layout
    for (Index i = 0; i < n; ++i) {
      coords(i, 0) = rng.uniform(-10.0, 10.0);
      coords(i, 1) = rng.uniform(-10.0, 10.0);
    }
    return coords;
  }

  // normalized adjacency D^-1/2 W D^-1/2; its top eigenvectors below the
  // trivial one are the bottom of the normalized Laplacian
  Vector dinv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    dinv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  Vector trivial(n);
  for (Index i = 0; i < n; ++i) trivial(i) = degree(i) > 0.0 ? std::sqrt(degree(i)) : 0.0;
  trivial.normalize();

  Matrix block(n, 2);
  for (Index i = 0; i < n; ++i) {
    block(i, 0) = rng.uniform(-1.0, 1.0);
    block(i, 1) = rng.uniform(-1.0, 1.0);
  }
  for (int iter = 0; iter < 300; ++iter) {
    // multiply by the normalized adjacency
    block = dinv_sqrt.asDiagonal() * (graph * (dinv_sqrt.asDiagonal() * block)).eval();
    // project out the trivial eigenvector, then orthonormalize
    for (int c = 0; c < 2; ++c) {
      block.col(c) -= trivial * trivial.dot(block.col(c));
    }
    block.col(0).normalize();
    block.col(1) -= block.col(0) * block.col(0).dot(block.col(1));
    const Scalar norm1 = block.col(1).norm();
    if (norm1 > 1e-30) {
      block.col(1) /= norm1;
    } else {
      for (Index i = 0; i < n; ++i) block(i, 1) = rng.uniform(-1.0, 1.0);
      block.col(1).normalize();
    }
  }
  coords = block;
  return coords;
}

}  // namespace

Matrix embed(const SparseGraph& graph, const UmapConfig& config) {
  const Index n = graph.rows();
  if (n == 0) throw std::invalid_argument("embed: empty graph");
  if (config.epochs < 1 || config.negative_samples < 0 || !(config.min_dist > 0.0)) {
    throw std::invalid_argument("embed: bad config");
  }
  const auto [a, b] = fit_curve(config.min_dist);

  Rng rng(config.seed ^ 0x5eedf00dULL);
  Matrix coords = spectral_init(graph, rng);

  // scale into [-10, 10] and break exact ties
  const Scalar peak = coords.cwiseAbs().maxCoeff();
  if (peak > 0.0) coords *= 10.0 / peak;
  for (Index i = 0; i < n; ++i) {
    coords(i, 0) += 1e-4 * rng.normal();
    coords(i, 1) += 1e-4 * rng.normal();
  }
  const Vector degree = Vector(graph * Vector::Ones(n));
  for (Index i = 0; i < n; ++i) {
    if (degree(i) <= 0.0) {
      // isolated row: origin plus seeded jitter
      coords(i, 0) = 1e-2 * rng.normal();
      coords(i, 1) = 1e-2 * rng.normal();
    }
  }

  // edge arrays over every stored direction
  std::vector<int> heads, tails;
  std::vector<Scalar> weights;
  for (int outer = 0; outer < graph.outerSize(); ++outer) {
    for (SparseGraph::InnerIterator it(graph, outer); it; ++it) {
      if (it.row() == it.col() || it.value() <= 0.0) continue;
      heads.push_back(static_cast<int>(it.col()));  // column-major: col is outer
      tails.push_back(static_cast<int>(it.row()));
      weights.push_back(it.value());
    }
  }
  if (heads.empty()) return coords;

  const Scalar max_weight = *std::max_element(weights.begin(), weights.end());
  const std::size_t n_edges = heads.size();
  std::vector<Scalar> epochs_per_sample(n_edges), next_sample(n_edges), next_negative(n_edges),
      epochs_per_negative(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) {
    epochs_per_sample[e] = max_weight / weights[e];
    next_sample[e] = epochs_per_sample[e];
    epochs_per_negative[e] = config.negative_samples > 0
                                 ? epochs_per_sample[e] / static_cast<Scalar>(config.negative_samples)
                                 : std::numeric_limits<Scalar>::infinity();
    next_negative[e] = epochs_per_negative[e];
  }

  Lcg lcg(config.seed * 0x9e3779b97f4a7c15ULL + 0xbf58476d1ce4e5b9ULL);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Scalar alpha =
        config.learning_rate * (1.0 - static_cast<Scalar>(epoch) / static_cast<Scalar>(config.epochs));
    for (std::size_t e = 0; e < n_edges; ++e) {
      if (next_sample[e] > static_cast<Scalar>(epoch)) continue;
      const int i = heads[e];
      const int j = tails[e];

      Scalar dx = coords(i, 0) - coords(j, 0);
      Scalar dy = coords(i, 1) - coords(j, 1);
      Scalar d2 = dx * dx + dy * dy;
      if (d2 > 0.0) {
        const Scalar pd = std::pow(d2, b);
        const Scalar coeff = -2.0 * a * b * pd / (d2 * (a * pd + 1.0));
        const Scalar gx = clip(coeff * dx);
        const Scalar gy = clip(coeff * dy);
        coords(i, 0) += alpha * gx;
        coords(i, 1) += alpha * gy;
        coords(j, 0) -= alpha * gx;
        coords(j, 1) -= alpha * gy;
      }
      next_sample[e] += epochs_per_sample[e];

      if (config.negative_samples > 0) {
        const int n_neg = std::max(
            0, static_cast<int>((static_cast<Scalar>(epoch) - next_negative[e]) /
                                epochs_per_negative[e]));
        for (int p = 0; p < n_neg; ++p) {
          const int r = static_cast<int>(lcg.next() % static_cast<std::uint64_t>(n));
          if (r == i) continue;
          dx = coords(i, 0) - coords(r, 0);
          dy = coords(i, 1) - coords(r, 1);
          d2 = dx * dx + dy * dy;
          Scalar gx, gy;
          if (d2 > 0.0) {
            const Scalar pd = std::pow(d2, b);
            const Scalar coeff = 2.0 * config.repulsion * b / ((0.001 + d2) * (a * pd + 1.0));
            gx = clip(coeff * dx);
            gy = clip(coeff * dy);
          } else {
            gx = kGradientClip;
            gy = kGradientClip;
          }
          coords(i, 0) += alpha * gx;
          coords(i, 1) += alpha * gy;
        }
        next_negative[e] += static_cast<Scalar>(n_neg) * epochs_per_negative[e];
      }
    }
    if (!coords.allFinite()) {
      throw std::runtime_error("embed: non-finite coordinates at epoch " + std::to_string(epoch));
    }
  }
  return coords;
}

Matrix reduce_to_2d(const Matrix& data, const UmapConfig& config) {
  NeighborGraph graph = knn_graph(data, config.n_neighbors);
  smooth_knn(graph);
  return embed(fuzzy_union(graph), config);
}

Scalar neighborhood_overlap(const Matrix& data, const Matrix& embedding, int k) {
  if (data.rows() != embedding.rows()) {
    throw std::invalid_argument("neighborhood_overlap: row counts differ");
  }
  const NeighborGraph high = knn_graph(data, k);
  const NeighborGraph low = knn_graph(embedding, k);
  Scalar total = 0.0;
  for (Index i = 0; i < data.rows(); ++i) {
    std::vector<int> a(k), b(k);
    for (int c = 0; c < k; ++c) {
      a[static_cast<std::size_t>(c)] = high.indices(i, c);
      b[static_cast<std::size_t>(c)] = low.indices(i, c);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<int> shared;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
    total += static_cast<Scalar>(shared.size()) / static_cast<Scalar>(k);
  }
  return total / static_cast<Scalar>(data.rows());
}

void write_embedding_csv(const Matrix& embedding, const std::vector<Index>& row_ids,
                         const std::string& path) {
  if (!row_ids.empty() && static_cast<Index>(row_ids.size()) != embedding.rows()) {
    throw std::invalid_argument("write_embedding_csv: row id count mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "row,u1,u2\n";
  for (Index i = 0; i < embedding.rows(); ++i) {
    const Index id = row_ids.empty() ? i : row_ids[static_cast<std::size_t>(i)];
    out << id << ',' << format_double(embedding(i, 0)) << ',' << format_double(embedding(i, 1))
        << '\n';
  }
}

void write_fuzzy_graph_csv(const SparseGraph& graph, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "i,j,weight\n";
  for (int outer = 0; outer < graph.outerSize(); ++outer) {
    for (SparseGraph::InnerIterator it(graph, outer); it; ++it) {
      if (it.row() < it.col()) {
        out << it.row() << ',' << it.col() << ',' << format_double(it.value()) << '\n';
      }
    }
  }
}

}  // namespace phm::umap
