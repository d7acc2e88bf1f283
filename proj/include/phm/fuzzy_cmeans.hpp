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

#include <string>
#include <vector>

namespace phm::fcm {

struct Config {
  int clusters = 6;
  Scalar fuzziness = 3.0;  // m > 1
  Scalar tolerance = 1e-5;  // on max absolute membership change
  int max_iters = 300;
  std::uint64_t seed = 0;
};

/// Soft partition: memberships(i, j) is how much point j belongs to cluster
/// i. Every column sums to 1; the objective history never increases.
struct Partition {
  Matrix memberships;  // c x n
  Matrix centroids;    // c x dim
  std::vector<Scalar> objective_history;
  Config config;
};

/// Alternating centroid/membership optimization from a seeded random
/// simplex initialization. Points coinciding with a centroid get full
/// membership there.
Partition fit(const Matrix& points, const Config& config);

/// argmax membership per point; ties go to the lower cluster index.
std::vector<int> hard_assign(const Partition& partition);

/// sum_i sum_j u_ij^m ||x_j - v_i||^2
Scalar objective(const Matrix& points, const Matrix& memberships, const Matrix& centroids,
                 Scalar fuzziness);

/// Weighted centroid update; accepts any c >= 1 so the one-cluster mean
/// identity stays testable.
Matrix update_centroids(const Matrix& points, const Matrix& memberships, Scalar fuzziness);

void write_partition_csv(const Partition& partition, const std::vector<Index>& row_ids,
                         const std::string& path);
void write_centroids_json(const Partition& partition, const std::string& path);

}  // namespace phm::fcm
