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

#include <json.hpp>

#include <string>
#include <vector>

namespace phm::metrics {

/// Co-occurrence counts between a ground-truth labeling (rows) and a
/// predicted clustering (columns).
struct ContingencyTable {
  Eigen::MatrixXi counts;      // r x s
  Eigen::VectorXi row_sums;    // a_i
  Eigen::VectorXi col_sums;    // b_j
  long long n = 0;
};

struct RandScores {
  Scalar ri = 0.0;
  Scalar ari = 0.0;
};

struct MutualInfoScores {
  Scalar mi = 0.0;   // nats
  Scalar nmi = 0.0;  // normalized by the arithmetic mean of entropies
  Scalar ami = 0.0;  // adjusted with the exact hypergeometric expectation
};

struct VMeasureScores {
  Scalar homogeneity = 0.0;
  Scalar completeness = 0.0;
  Scalar v = 0.0;
};

ContingencyTable contingency(const std::vector<int>& labels_true,
                             const std::vector<int>& labels_pred);

RandScores rand_scores(const ContingencyTable& table);

MutualInfoScores mutual_info_scores(const ContingencyTable& table);

VMeasureScores v_measure_scores(const ContingencyTable& table, Scalar beta = 1.0);

Scalar fowlkes_mallows(const ContingencyTable& table);

/// All nine external validation scores in one record.
struct MetricReport {
  Scalar ari, ri, ami, nmi, mi, homogeneity, completeness, v_measure, fms;
};

MetricReport all_metrics(const std::vector<int>& labels_true, const std::vector<int>& labels_pred);

/// Flat JSON object keyed ARI, RI, AMI, NMI, MI, Homogeneity, Completeness,
/// V-measure, FMS.
nlohmann::json to_json(const MetricReport& report);

std::vector<std::string> metric_names();
Scalar metric_value(const MetricReport& report, const std::string& name);

}  // namespace phm::metrics
