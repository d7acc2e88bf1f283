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
#include "phm/cluster_validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace phm::metrics {

namespace {

Scalar pairs2(Scalar x) { return x * (x - 1.0) / 2.0; }

Scalar entropy(const Eigen::VectorXi& sums, long long n) {
  Scalar h = 0.0;
  for (Index i = 0; i < sums.size(); ++i) {
    if (sums(i) > 0) {
      const Scalar p = static_cast<Scalar>(sums(i)) / static_cast<Scalar>(n);
      h -= p * std::log(p);
    }
  }
  return h;
}

struct PairCounts {
  Scalar tp, fp, fn, tn;
};

PairCounts pair_counts(const ContingencyTable& t) {
  Scalar same_both = 0.0;
  for (Index i = 0; i < t.counts.rows(); ++i) {
    for (Index j = 0; j < t.counts.cols(); ++j) same_both += pairs2(t.counts(i, j));
  }
  Scalar same_true = 0.0, same_pred = 0.0;
  for (Index i = 0; i < t.row_sums.size(); ++i) same_true += pairs2(t.row_sums(i));
  for (Index j = 0; j < t.col_sums.size(); ++j) same_pred += pairs2(t.col_sums(j));
  const Scalar total = pairs2(static_cast<Scalar>(t.n));
  return {same_both, same_pred - same_both, same_true - same_both,
          total - same_true - same_pred + same_both};
}

/// Expected mutual information under the permutation model, exact
/// hypergeometric sum in log space.
Scalar expected_mi(const ContingencyTable& t) {
  const Scalar n = static_cast<Scalar>(t.n);
  const auto lg = [](Scalar x) { return std::lgamma(x + 1.0); };  // log(x!)
  Scalar emi = 0.0;
  for (Index i = 0; i < t.row_sums.size(); ++i) {
    const Scalar a = t.row_sums(i);
    if (a == 0.0) continue;
    for (Index j = 0; j < t.col_sums.size(); ++j) {
      const Scalar b = t.col_sums(j);
      if (b == 0.0) continue;
      const long long lo = std::max<long long>(1, t.row_sums(i) + t.col_sums(j) - t.n);
      const long long hi = std::min<long long>(t.row_sums(i), t.col_sums(j));
      for (long long k = lo; k <= hi; ++k) {
        const Scalar nij = static_cast<Scalar>(k);
        const Scalar log_p = lg(a) + lg(b) + lg(n - a) + lg(n - b) - lg(n) - lg(nij) -
                             lg(a - nij) - lg(b - nij) - lg(n - a - b + nij);
        emi += (nij / n) * std::log(n * nij / (a * b)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

}  // namespace

ContingencyTable contingency(const std::vector<int>& labels_true,
                             const std::vector<int>& labels_pred) {
  if (labels_true.size() != labels_pred.size()) {
    throw std::invalid_argument("contingency: label sequences differ in length");
  }
  if (labels_true.empty()) throw std::invalid_argument("contingency: empty labelings");

  auto remap = [](const std::vector<int>& labels) {
    std::map<int, int> ids;
    for (int v : labels) ids.emplace(v, 0);
    int next = 0;
    for (auto& [value, id] : ids) id = next++;
    return ids;
  };
  const auto true_ids = remap(labels_true);
  const auto pred_ids = remap(labels_pred);

  ContingencyTable t;
  t.n = static_cast<long long>(labels_true.size());
  t.counts = Eigen::MatrixXi::Zero(static_cast<Index>(true_ids.size()),
                                   static_cast<Index>(pred_ids.size()));
  for (std::size_t r = 0; r < labels_true.size(); ++r) {
    t.counts(true_ids.at(labels_true[r]), pred_ids.at(labels_pred[r])) += 1;
  }
  t.row_sums = t.counts.rowwise().sum();
  t.col_sums = t.counts.colwise().sum();
  return t;
}

RandScores rand_scores(const ContingencyTable& table) {
  if (table.n < 2) throw std::invalid_argument("rand_scores: need at least 2 points");
  const PairCounts pc = pair_counts(table);
  RandScores scores;
  scores.ri = (pc.tp + pc.tn) / (pc.tp + pc.fp + pc.fn + pc.tn);
  if (pc.fn == 0.0 && pc.fp == 0.0) {
    scores.ari = 1.0;  // identical partitions, degenerate expectation
    return scores;
  }
  const Scalar index = pc.tp;
  const Scalar sum_true = pc.tp + pc.fn;
  const Scalar sum_pred = pc.tp + pc.fp;
  const Scalar expected = sum_true * sum_pred / pairs2(static_cast<Scalar>(table.n));
  const Scalar max_index = 0.5 * (sum_true + sum_pred);
  scores.ari = (index - expected) / (max_index - expected);
  return scores;
}

MutualInfoScores mutual_info_scores(const ContingencyTable& table) {
  const Scalar n = static_cast<Scalar>(table.n);
  MutualInfoScores scores;
  for (Index i = 0; i < table.counts.rows(); ++i) {
    for (Index j = 0; j < table.counts.cols(); ++j) {
      const Scalar nij = table.counts(i, j);
      if (nij > 0.0) {
        scores.mi += (nij / n) * std::log(n * nij / (static_cast<Scalar>(table.row_sums(i)) *
                                                     static_cast<Scalar>(table.col_sums(j))));
      }
    }
  }
  scores.mi = std::max(scores.mi, 0.0);  // clip tiny negative round-off

  const Scalar h_true = entropy(table.row_sums, table.n);
  const Scalar h_pred = entropy(table.col_sums, table.n);
  const Scalar mean_h = 0.5 * (h_true + h_pred);

  if (h_true == 0.0 && h_pred == 0.0) {
    // both labelings single class, hence identical up to naming
    scores.nmi = 1.0;
    scores.ami = 1.0;
    return scores;
  }
  if (h_true == 0.0 || h_pred == 0.0) {
    scores.nmi = 0.0;
    scores.ami = 0.0;
    return scores;
  }
  scores.nmi = scores.mi / mean_h;

  const Scalar emi = expected_mi(table);
  Scalar denominator = mean_h - emi;
  // keep the ratio defined when the adjustment degenerates
  if (denominator < 0.0) {
    denominator = std::min(denominator, -std::numeric_limits<Scalar>::epsilon());
  } else {
    denominator = std::max(denominator, std::numeric_limits<Scalar>::epsilon());
  }
  scores.ami = (scores.mi - emi) / denominator;
  return scores;
}

VMeasureScores v_measure_scores(const ContingencyTable& table, Scalar beta) {
  const Scalar n = static_cast<Scalar>(table.n);
  const Scalar h_true = entropy(table.row_sums, table.n);
  const Scalar h_pred = entropy(table.col_sums, table.n);

  Scalar h_true_given_pred = 0.0;
  Scalar h_pred_given_true = 0.0;
  for (Index i = 0; i < table.counts.rows(); ++i) {
    for (Index j = 0; j < table.counts.cols(); ++j) {
      const Scalar nij = table.counts(i, j);
      if (nij <= 0.0) continue;
      h_true_given_pred -= (nij / n) * std::log(nij / static_cast<Scalar>(table.col_sums(j)));
      h_pred_given_true -= (nij / n) * std::log(nij / static_cast<Scalar>(table.row_sums(i)));
    }
  }

  VMeasureScores scores;
  scores.homogeneity = h_true > 0.0 ? 1.0 - h_true_given_pred / h_true : 1.0;
  scores.completeness = h_pred > 0.0 ? 1.0 - h_pred_given_true / h_pred : 1.0;
  const Scalar hc = beta * scores.homogeneity + scores.completeness;
  scores.v = hc > 0.0
                 ? (1.0 + beta) * scores.homogeneity * scores.completeness / hc
                 : 0.0;
  return scores;
}

Scalar fowlkes_mallows(const ContingencyTable& table) {
  if (table.n < 2) throw std::invalid_argument("fowlkes_mallows: need at least 2 points");
  const PairCounts pc = pair_counts(table);
  const Scalar denom = (pc.tp + pc.fp) * (pc.tp + pc.fn);
  return denom > 0.0 ? pc.tp / std::sqrt(denom) : 0.0;
}

MetricReport all_metrics(const std::vector<int>& labels_true, const std::vector<int>& labels_pred) {
  const ContingencyTable table = contingency(labels_true, labels_pred);
  const RandScores rand = rand_scores(table);
  const MutualInfoScores mutual = mutual_info_scores(table);
  const VMeasureScores vm = v_measure_scores(table);
  MetricReport report;
  report.ari = rand.ari;
  report.ri = rand.ri;
  report.ami = mutual.ami;
  report.nmi = mutual.nmi;
  report.mi = mutual.mi;
  report.homogeneity = vm.homogeneity;
  report.completeness = vm.completeness;
  report.v_measure = vm.v;
  report.fms = fowlkes_mallows(table);
  return report;
}

nlohmann::json to_json(const MetricReport& report) {
  return nlohmann::json{{"ARI", report.ari},
                        {"RI", report.ri},
                        {"AMI", report.ami},
                        {"NMI", report.nmi},
                        {"MI", report.mi},
                        {"Homogeneity", report.homogeneity},
                        {"Completeness", report.completeness},
                        {"V-measure", report.v_measure},
                        {"FMS", report.fms}};
}

std::vector<std::string> metric_names() {
  return {"ARI", "RI", "AMI", "NMI", "MI", "Homogeneity", "Completeness", "V-measure", "FMS"};
}

Scalar metric_value(const MetricReport& report, const std::string& name) {
  if (name == "ARI") return report.ari;
  if (name == "RI") return report.ri;
  if (name == "AMI") return report.ami;
  if (name == "NMI") return report.nmi;
  if (name == "MI") return report.mi;
  if (name == "Homogeneity") return report.homogeneity;
  if (name == "Completeness") return report.completeness;
  if (name == "V-measure") return report.v_measure;
  if (name == "FMS") return report.fms;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

}  // namespace phm::metrics
