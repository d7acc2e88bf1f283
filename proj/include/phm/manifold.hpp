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
#pragma once

#include "phm/common.hpp"

#include <Eigen/Sparse>

#include <string>
#include <utility>
#include <vector>

namespace phm::umap {

using SparseGraph = Eigen::SparseMatrix<Scalar>;

/// Exact k nearest neighbors per row with the per-row local metric
/// calibration attached by smooth_knn (rho: distance to the nearest
/// nonzero-distance neighbor; sigma: bandwidth hitting the log2(k) target).
struct NeighborGraph {
  Eigen::MatrixXi indices;  // n x k, ties broken by lower row index
  Matrix distances;         // n x k, non-decreasing per row
  Vector rho;
  Vector sigma;

  Index rows() const { return indices.rows(); }
  int neighbors() const { return static_cast<int>(indices.cols()); }
};

struct UmapConfig {
  int n_neighbors = 15;
  Scalar min_dist = 0.1;
  int epochs = 200;
  std::uint64_t seed = 0;
  int negative_samples = 5;
  Scalar learning_rate = 1.0;
  Scalar repulsion = 1.0;
};

/// Brute-force Euclidean k-NN (exact; quadratic scan). Requires n > k >= 2.
NeighborGraph knn_graph(const Matrix& data, int k);

/// Calibrate rho and sigma per row so that
/// sum_j exp(-max(0, d_ij - rho_i) / sigma_i) hits `target` (default
/// log2(k)) within 1e-5, by at most 64 bisection steps. Degenerate rows
/// where every neighbor sits at rho get sigma clamped to a small floor.
void smooth_knn(NeighborGraph& graph, Scalar target = 0.0);

/// Directed memberships w_ij = exp(-max(0, d_ij - rho_i) / sigma_i)
/// symmetrized with the probabilistic t-conorm a + b - ab. The result is
/// exactly symmetric with a zero diagonal and entries in (0, 1].
SparseGraph fuzzy_union(const NeighborGraph& graph);

/// Least-squares fit of 1/(1 + a x^(2b)) to the min_dist membership curve.
std::pair<Scalar, Scalar> fit_curve(Scalar min_dist, Scalar spread = 1.0);

/// Spectral-initialized, edge-sampled SGD layout of the fuzzy graph into 2D.
/// Single threaded and fully seeded: identical inputs give identical bytes.
Matrix embed(const SparseGraph& graph, const UmapConfig& config);

/// knn -> smooth -> union -> embed, the whole reduction.
Matrix reduce_to_2d(const Matrix& data, const UmapConfig& config);

/// Mean fraction of shared neighbors between the k-NN sets of the original
/// space and of the embedding; 1 is perfect neighborhood preservation.
Scalar neighborhood_overlap(const Matrix& data, const Matrix& embedding, int k);

void write_embedding_csv(const Matrix& embedding, const std::vector<Index>& row_ids,
                         const std::string& path);

/// Sparse triple list (i, j, weight), upper triangle, for debugging.
void write_fuzzy_graph_csv(const SparseGraph& graph, const std::string& path);

}  // namespace phm::umap
