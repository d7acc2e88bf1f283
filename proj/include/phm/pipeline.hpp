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

#include "phm/cluster_validation.hpp"
#include "phm/cmapss.hpp"
#include "phm/common.hpp"
#include "phm/fuzzy_cmeans.hpp"
#include "phm/manifold.hpp"
#include "phm/rul_net.hpp"
#include "phm/shapley.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace phm::pipeline {

struct Options {
  std::string data_path;
  std::string out_dir = "out";
  std::uint64_t seed = 42;

  // regressor
  int epochs = 100;
  Scalar learning_rate = 1e-4;
  int batch_size = 32;
  Scalar train_fraction = 0.8;
  std::vector<Index> hidden = {70, 6};

  // attribution
  int top_k = 5;
  int coalitions = 0;  // 0 -> 2d + 2048
  int background_rows = 100;

  // reduction and clustering
  int neighbors = 15;
  Scalar min_dist = 0.1;
  int umap_epochs = 200;
  int clusters = 6;
  Scalar fuzziness = 3.0;

  std::vector<int> cases = {1, 2, 3, 4};
  std::string truth = "ann";        // "ann" | "piecewise"
  std::string population = "test";  // "test" | "full"
  bool cycle_feature = false;
  int threads = 0;
  bool force = false;  // recompute cached stages
  bool export_fuzzy_graph = false;
  bool quiet = false;
};

/// The four-way experiment grid: which matrix feeds the reducer and whether
/// it is cut down to the attribution top-k.
struct DataCase {
  int id = 1;
  bool shap_source = false;
  bool shap_informed = false;
  int dimensions = 0;

  const char* source_name() const { return shap_source ? "ShapValues" : "RawData"; }
};

DataCase data_case(int id, int full_dims, int top_k);

/// Everything computed once and shared by the four cases.
struct SharedStages {
  cmapss::CycleTable table;       // retained raw columns
  cmapss::CycleTable normalized;  // same rows, scaled into [-1, 1]
  Vector labels;                  // piecewise RUL per row
  cmapss::Split split;
  net::Regressor model;
  std::vector<Scalar> train_rmse, test_rmse;
  std::vector<Index> eval_rows;
  Matrix eval_features;  // normalized features of the evaluated rows
  Vector eval_predictions;
  std::vector<int> truth_bins;
  shap::AttributionMatrix attributions;
  shap::FeatureRanking ranking;
  std::vector<std::string> top_features;
  std::vector<Index> top_columns;
  std::string dataset_fingerprint;
  Scalar train_seconds = 0.0, explain_seconds = 0.0, ingest_seconds = 0.0;
  bool model_cached = false, attributions_cached = false;
};

struct CaseReport {
  DataCase data_case;
  std::vector<std::string> feature_names;
  Matrix embedding;
  fcm::Partition partition;
  std::vector<int> hard_labels;
  metrics::MetricReport metrics{};
  Scalar seconds = 0.0;
};

enum class Stage { Ingest, Train, Explain, Embed, Cluster, Validate, All };

struct RunResult {
  SharedStages shared;
  std::vector<CaseReport> reports;
  nlohmann::json manifest;
};

/// Ground-truth maintenance bins for the evaluated rows: the model's
/// predicted RUL binned (default) or the piecewise labels binned.
std::vector<int> ground_truth_bins(const SharedStages& shared, const Options& options);

SharedStages prepare_shared(const Options& options, Stage stage);

CaseReport run_case(const SharedStages& shared, const DataCase& data_case, const Options& options,
                    Stage stage);

/// Single-command reproduction: ingest, train, attribute, rank, run every
/// selected case, and emit the metric-by-case comparison table plus a
/// manifest that pins the run.
RunResult run_all(const Options& options, Stage stage = Stage::All);

nlohmann::json options_to_json(const Options& options);

}  // namespace phm::pipeline
