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
#include "phm/fuzzy_cmeans.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace phm::fcm {

namespace {

/// Squared Euclidean distances, clusters x points.
Matrix pairwise_sq(const Matrix& points, const Matrix& centroids) {
  const Index c = centroids.rows();
  const Index n = points.rows();
  Matrix d2(c, n);
  for (Index i = 0; i < c; ++i) {
    d2.row(i) = (points.rowwise() - centroids.row(i)).rowwise().squaredNorm().transpose();
  }
  return d2.cwiseMax(0.0);
}

/// Membership update for one distance column; handles coincident points.
void update_memberships(const Matrix& d2, Scalar fuzziness, Matrix& memberships) {
  const Index c = d2.rows();
  const Index n = d2.cols();
  const Scalar exponent = 1.0 / (fuzziness - 1.0);
  for (Index j = 0; j < n; ++j) {
    Index zero_at = -1;
    for (Index i = 0; i < c; ++i) {
      if (d2(i, j) <= 1e-30) {  // coincident with the centroid
        zero_at = i;
        break;
      }
    }
    if (zero_at >= 0) {
      memberships.col(j).setZero();
      memberships(zero_at, j) = 1.0;
      continue;
    }
    // u_ij = 1 / sum_k (d_ij / d_kj)^(2/(m-1)), computed via reciprocals
    Scalar total = 0.0;
    for (Index i = 0; i < c; ++i) {
      memberships(i, j) = std::pow(1.0 / d2(i, j), exponent);
      total += memberships(i, j);
    }
    memberships.col(j) /= total;
  }
}

}  // namespace

Matrix update_centroids(const Matrix& points, const Matrix& memberships, Scalar fuzziness) {
  if (memberships.cols() != points.rows()) {
    throw std::invalid_argument("update_centroids: memberships and points disagree");
  }
  const Matrix powered = memberships.array().pow(fuzziness).matrix();  // c x n
  Matrix centroids = powered * points;                                 // c x dim
  const Vector mass = powered.rowwise().sum();
  for (Index i = 0; i < centroids.rows(); ++i) {
    if (mass(i) > 0.0) {
      centroids.row(i) /= mass(i);
    } else {
      centroids.row(i) = points.colwise().mean();
    }
  }
  return centroids;
}

Scalar objective(const Matrix& points, const Matrix& memberships, const Matrix& centroids,
                 Scalar fuzziness) {
  const Matrix d2 = pairwise_sq(points, centroids);
  return (memberships.array().pow(fuzziness) * d2.array()).sum();
}

Partition fit(const Matrix& points, const Config& config) {
  const Index n = points.rows();
  const Index c = config.clusters;
  if (c < 1) throw std::invalid_argument("fcm: clusters must be >= 1");
  if (n <= c) throw std::invalid_argument("fcm: need more points than clusters");
  if (!(config.fuzziness > 1.0)) throw std::invalid_argument("fcm: fuzziness must exceed 1");
  if (!points.allFinite()) throw std::invalid_argument("fcm: input contains non-finite values");

  Partition part;
  part.config = config;
  part.memberships.resize(c, n);
  Rng rng(config.seed);
  for (Index j = 0; j < n; ++j) {
    Scalar total = 0.0;
    for (Index i = 0; i < c; ++i) {
      const Scalar u = rng.uniform();
      part.memberships(i, j) = u;
      total += u;
    }
    part.memberships.col(j) /= total;
  }

  Matrix previous = part.memberships;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    part.centroids = update_centroids(points, part.memberships, config.fuzziness);
    const Matrix d2 = pairwise_sq(points, part.centroids);
    update_memberships(d2, config.fuzziness, part.memberships);
    part.objective_history.push_back(
        objective(points, part.memberships, part.centroids, config.fuzziness));
    const Scalar shift = (part.memberships - previous).cwiseAbs().maxCoeff();
    if (shift < config.tolerance) break;
    previous = part.memberships;
  }
  return part;
}

std::vector<int> hard_assign(const Partition& partition) {
  const Index n = partition.memberships.cols();
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    Index best = 0;
    partition.memberships.col(j).maxCoeff(&best);
    labels[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return labels;
}

void write_partition_csv(const Partition& partition, const std::vector<Index>& row_ids,
                         const std::string& path) {
  const Index n = partition.memberships.cols();
  if (!row_ids.empty() && static_cast<Index>(row_ids.size()) != n) {
    throw std::invalid_argument("write_partition_csv: row id count mismatch");
  }
  const std::vector<int> labels = hard_assign(partition);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "row";
  for (Index i = 0; i < partition.memberships.rows(); ++i) out << ",u" << i;
  out << ",hard_label\n";
  for (Index j = 0; j < n; ++j) {
    out << (row_ids.empty() ? j : row_ids[static_cast<std::size_t>(j)]);
    for (Index i = 0; i < partition.memberships.rows(); ++i) {
      out << ',' << format_double(partition.memberships(i, j));
    }
    out << ',' << labels[static_cast<std::size_t>(j)] << '\n';
  }
}

void write_centroids_json(const Partition& partition, const std::string& path) {
  nlohmann::json j;
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < partition.centroids.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index d = 0; d < partition.centroids.cols(); ++d) row.push_back(partition.centroids(i, d));
    rows.push_back(std::move(row));
  }
  j["centroids"] = std::move(rows);
  j["clusters"] = partition.centroids.rows();
  j["fuzziness"] = partition.config.fuzziness;
  j["iterations"] = partition.objective_history.size();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace phm::fcm
