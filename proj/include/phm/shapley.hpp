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

#include <functional>
#include <string>
#include <vector>

namespace phm::shap {

/// Batch model evaluator: rows in, one prediction per row out. Keeps the
/// attribution code agnostic of what the model actually is.
using ModelFn = std::function<Vector(const Matrix&)>;

/// Per-row, per-feature Shapley values plus the shared base value
/// (expected model output over the background sample). Local accuracy:
/// base_value + phi.row(i).sum() equals the model prediction of row i.
struct AttributionMatrix {
  Matrix phi;          // n x d
  Scalar base_value = 0.0;
  Matrix background;   // m x d reference rows
  std::vector<std::string> feature_names;
};

struct Attribution {
  Vector phi;
  Scalar base_value = 0.0;
};

/// Features sorted by mean |phi| over rows, descending; ties keep the lower
/// feature index first.
struct FeatureRanking {
  std::vector<std::string> names;   // sorted
  std::vector<Index> indices;       // into the original feature order
  Vector scores;                    // non-increasing
};

/// Interventional value of a coalition: features in `subset` pinned to the
/// row's values, the rest taken from each background row, averaged over the
/// background.
Scalar coalition_value(const ModelFn& model, const RowVector& row,
                       const std::vector<bool>& subset, const Matrix& background);

/// Exact Shapley values by enumerating all 2^d coalitions (d <= 20).
Attribution shapley_exact(const ModelFn& model, const RowVector& row, const Matrix& background);

/// Coalition masks and kernel weights shared by every row of a dataset.
/// Fully enumerates paired subset sizes while the budget allows, then
/// samples the remaining sizes from the Shapley kernel.
struct MaskPlan {
  int dims = 0;
  std::vector<std::uint64_t> masks;
  Vector weights;
  bool exhaustive = false;  // all 2^d - 2 proper masks present
};

MaskPlan make_mask_plan(int dims, int n_coalitions, std::uint64_t seed);

/// Kernel-weighted linear regression estimate of the Shapley values with the
/// efficiency constraint enforced exactly. n_coalitions >= d + 2.
Attribution shapley_kernel(const ModelFn& model, const RowVector& row, const Matrix& background,
                           int n_coalitions, std::uint64_t seed);

/// Attribute many rows with one shared mask plan and one shared regression
/// factorization; rows are processed independently (optionally in threads).
AttributionMatrix attribute_rows(const ModelFn& model, const Matrix& rows, const Matrix& background,
                                 const std::vector<std::string>& feature_names, int n_coalitions,
                                 std::uint64_t seed, int threads = 0);

/// Max over rows of |base + sum(phi) - model(row)|.
Scalar local_accuracy_check(const AttributionMatrix& attributions, const ModelFn& model,
                            const Matrix& rows);

FeatureRanking rank_features(const AttributionMatrix& attributions);

std::vector<std::string> select_top_k(const FeatureRanking& ranking, int k);

/// Default coalition budget for d features.
inline int default_coalitions(int dims) { return 2 * dims + 2048; }

void write_attributions_csv(const AttributionMatrix& attributions, const std::string& path);
void write_attributions_json(const AttributionMatrix& attributions, const std::string& path);
void write_ranking_json(const FeatureRanking& ranking, const std::string& path);

}  // namespace phm::shap
