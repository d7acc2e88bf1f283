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
#include "phm/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace phm::pipeline {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

Scalar seconds_since(Clock::time_point start) {
  return std::chrono::duration<Scalar>(Clock::now() - start).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void log(const Options& options, const std::string& line) {
  if (!options.quiet) std::cout << line << '\n';
}

std::string model_cache_key(const Options& options, const std::string& fingerprint, Index dims) {
  std::string key = fingerprint;
  key += '|' + std::to_string(options.seed) + '|' + std::to_string(options.epochs);
  key += '|' + format_double(options.learning_rate) + '|' + std::to_string(options.batch_size);
  key += '|' + format_double(options.train_fraction) + '|' + std::to_string(options.cycle_feature);
  key += '|' + std::to_string(dims);
  for (Index h : options.hidden) key += 'h' + std::to_string(h);
  return hex64(fnv1a64(key));
}

std::string attr_cache_key(const Options& options, const std::string& model_key, int coalitions) {
  std::string key = model_key;
  key += '|' + std::to_string(coalitions) + '|' + std::to_string(options.background_rows);
  key += '|' + options.population;
  return hex64(fnv1a64(key));
}

void write_history_csv(const std::vector<Scalar>& train_rmse, const std::vector<Scalar>& test_rmse,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "epoch,train_rmse,test_rmse\n";
  for (std::size_t e = 0; e < train_rmse.size(); ++e) {
    out << e << ',' << format_double(train_rmse[e]) << ',' << format_double(test_rmse[e]) << '\n';
  }
}

shap::AttributionMatrix read_attributions_json(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  shap::AttributionMatrix attr;
  attr.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  attr.base_value = j.at("base_value").get<Scalar>();
  const auto& phi = j.at("phi");
  const Index rows = static_cast<Index>(phi.size());
  const Index cols = rows > 0 ? static_cast<Index>(phi.at(0).size()) : 0;
  attr.phi.resize(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) attr.phi(r, c) = phi.at(r).at(c).get<Scalar>();
  }
  return attr;
}

void write_ground_truth_csv(const SharedStages& shared, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "row,predicted_rul,piecewise_rul,bin_index,bin\n";
  for (std::size_t i = 0; i < shared.eval_rows.size(); ++i) {
    const Index row = shared.eval_rows[i];
    const int bin = shared.truth_bins[i];
    out << row << ',' << format_double(shared.eval_predictions(static_cast<Index>(i))) << ','
        << format_double(shared.labels(row)) << ',' << bin << ','
        << cmapss::bin_name(static_cast<cmapss::MaintenanceBin>(bin)) << '\n';
  }
}

Matrix select_columns(const Matrix& source, const std::vector<Index>& columns) {
  Matrix out(source.rows(), static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.col(static_cast<Index>(c)) = source.col(columns[c]);
  }
  return out;
}

}  // namespace

DataCase data_case(int id, int full_dims, int top_k) {
  DataCase dc;
  dc.id = id;
  switch (id) {
    case 1: dc.shap_source = false; dc.shap_informed = false; break;
    case 2: dc.shap_source = false; dc.shap_informed = true; break;
    case 3: dc.shap_source = true; dc.shap_informed = false; break;
    case 4: dc.shap_source = true; dc.shap_informed = true; break;
    default: throw std::invalid_argument("data_case: id must be 1..4");
  }
  dc.dimensions = dc.shap_informed ? top_k : full_dims;
  return dc;
}

std::vector<int> ground_truth_bins(const SharedStages& shared, const Options& options) {
  std::vector<int> bins(shared.eval_rows.size());
  for (std::size_t i = 0; i < shared.eval_rows.size(); ++i) {
    const Scalar rul = options.truth == "piecewise"
                           ? shared.labels(shared.eval_rows[i])
                           : shared.eval_predictions(static_cast<Index>(i));
    bins[i] = static_cast<int>(cmapss::assign_bin(rul));
  }
  return bins;
}

SharedStages prepare_shared(const Options& options, Stage stage) {
  if (options.truth != "ann" && options.truth != "piecewise") {
    throw std::invalid_argument("truth must be 'ann' or 'piecewise'");
  }
  if (options.population != "test" && options.population != "full") {
    throw std::invalid_argument("population must be 'test' or 'full'");
  }
  fs::create_directories(options.out_dir);
  const fs::path out(options.out_dir);

  SharedStages shared;
  auto t0 = Clock::now();

  // ingest: parse, fingerprint, filter constant columns
  const std::string raw_text = read_file(options.data_path);
  shared.dataset_fingerprint = hex64(fnv1a64(raw_text));
  shared.table = cmapss::drop_constant_columns(cmapss::parse(raw_text, options.cycle_feature));
  shared.labels = cmapss::label_rul(shared.table);
  shared.normalized = cmapss::normalize(shared.table);
  cmapss::write_table_csv(shared.table, (out / "table.csv").string());
  cmapss::write_table_sidecar(shared.table, (out / "table_meta.json").string());
  shared.ingest_seconds = seconds_since(t0);
  log(options, "[ingest] " + std::to_string(shared.table.rows()) + " rows, " +
                   std::to_string(shared.table.dims()) + " retained features (" +
                   format_fixed(shared.ingest_seconds, 1) + "s)");
  if (stage == Stage::Ingest) return shared;

  // train
  t0 = Clock::now();
  shared.split = cmapss::split_train_test(shared.normalized, shared.labels,
                                          options.train_fraction, options.seed);
  std::vector<Index> dims;
  dims.push_back(shared.table.dims());
  for (Index h : options.hidden) dims.push_back(h);
  dims.push_back(1);

  const std::string model_key = model_cache_key(options, shared.dataset_fingerprint,
                                                shared.table.dims());
  const fs::path model_path = out / ("model_" + model_key + ".json");
  const fs::path history_path = out / ("history_" + model_key + ".csv");
  if (!options.force && fs::exists(model_path)) {
    nlohmann::json extra;
    shared.model = net::load(model_path.string(), &extra);
    shared.train_rmse = extra.at("train_rmse").get<std::vector<Scalar>>();
    shared.test_rmse = extra.at("test_rmse").get<std::vector<Scalar>>();
    shared.model_cached = true;
  } else {
    shared.model = net::init(dims, options.seed);
    net::TrainConfig config;
    config.learning_rate = options.learning_rate;
    config.batch_size = options.batch_size;
    config.epochs = options.epochs;
    config.seed = options.seed;
    const net::TrainHistory history =
        net::train(shared.model, shared.split.train_x, shared.split.train_y, shared.split.test_x,
                   shared.split.test_y, config);
    shared.train_rmse = history.train_rmse;
    shared.test_rmse = history.test_rmse;
    nlohmann::json extra;
    extra["feature_names"] = shared.table.feature_names;
    extra["col_min"] = std::vector<Scalar>(shared.table.col_min.data(),
                                           shared.table.col_min.data() + shared.table.dims());
    extra["col_max"] = std::vector<Scalar>(shared.table.col_max.data(),
                                           shared.table.col_max.data() + shared.table.dims());
    extra["train_rmse"] = shared.train_rmse;
    extra["test_rmse"] = shared.test_rmse;
    extra["config"] = options_to_json(options);
    net::save(shared.model, model_path.string(), extra);
    write_history_csv(shared.train_rmse, shared.test_rmse, history_path.string());
  }
  shared.train_seconds = seconds_since(t0);
  log(options, std::string("[train] ") + (shared.model_cached ? "cached; " : "") + "train RMSE " +
                   format_fixed(shared.train_rmse.back(), 2) + ", test RMSE " +
                   format_fixed(shared.test_rmse.back(), 2) + " (" +
                   format_fixed(shared.train_seconds, 1) + "s)");

  // evaluation population, predictions, ground truth
  if (options.population == "full") {
    shared.eval_rows.resize(static_cast<std::size_t>(shared.table.rows()));
    for (Index i = 0; i < shared.table.rows(); ++i) {
      shared.eval_rows[static_cast<std::size_t>(i)] = i;
    }
    shared.eval_features = shared.normalized.features;
  } else {
    shared.eval_rows = shared.split.test_rows;
    shared.eval_features = shared.split.test_x;
  }
  shared.eval_predictions = net::predict(shared.model, shared.eval_features);
  shared.truth_bins = ground_truth_bins(shared, options);
  write_ground_truth_csv(shared, (out / "ground_truth.csv").string());
  if (stage == Stage::Train) return shared;

  // explain
  t0 = Clock::now();
  const int coalitions = options.coalitions > 0
                             ? options.coalitions
                             : shap::default_coalitions(static_cast<int>(shared.table.dims()));
  const std::string attr_key = attr_cache_key(options, model_key, coalitions);
  const fs::path attr_json = out / ("attributions_" + attr_key + ".json");
  const fs::path attr_csv = out / ("attributions_" + attr_key + ".csv");
  const fs::path ranking_path = out / ("ranking_" + attr_key + ".json");

  // background: seeded subsample of the training split
  const Index train_rows = shared.split.train_x.rows();
  const Index m = std::min<Index>(options.background_rows, train_rows);
  Rng bg_rng(options.seed ^ 0xbac69d0ffULL);
  Matrix background(m, shared.table.dims());
  for (Index i = 0; i < m; ++i) {
    background.row(i) =
        shared.split.train_x.row(static_cast<Index>(bg_rng.uniform_index(static_cast<std::uint64_t>(train_rows))));
  }

  const shap::ModelFn model_fn = [&model = shared.model](const Matrix& x) {
    return net::forward(model, x);
  };
  if (!options.force && fs::exists(attr_json)) {
    shared.attributions = read_attributions_json(attr_json.string());
    shared.attributions.background = background;
    shared.attributions_cached = true;
  } else {
    shared.attributions =
        shap::attribute_rows(model_fn, shared.eval_features, background, shared.table.feature_names,
                             coalitions, options.seed ^ 0x5a9ULL, options.threads);
    shap::write_attributions_json(shared.attributions, attr_json.string());
    shap::write_attributions_csv(shared.attributions, attr_csv.string());
  }
  shared.ranking = shap::rank_features(shared.attributions);
  shap::write_ranking_json(shared.ranking, ranking_path.string());
  const int top_k = std::min<int>(options.top_k, static_cast<int>(shared.table.dims()));
  shared.top_features = shap::select_top_k(shared.ranking, top_k);
  shared.top_columns.assign(shared.ranking.indices.begin(), shared.ranking.indices.begin() + top_k);
  shared.explain_seconds = seconds_since(t0);
  std::string tops;
  for (const auto& name : shared.top_features) tops += (tops.empty() ? "" : ", ") + name;
  log(options, "[explain] " + std::string(shared.attributions_cached ? "cached; " : "") + "top-" +
                   std::to_string(top_k) + ": " + tops + " (" +
                   format_fixed(shared.explain_seconds, 1) + "s)");
  return shared;
}

CaseReport run_case(const SharedStages& shared, const DataCase& dc, const Options& options,
                    Stage stage) {
  const auto t0 = Clock::now();
  const fs::path out(options.out_dir);
  const std::string prefix = "case" + std::to_string(dc.id) + "_";

  CaseReport report;
  report.data_case = dc;

  Matrix input;
  if (dc.shap_source) {
    input = dc.shap_informed ? select_columns(shared.attributions.phi, shared.top_columns)
                             : shared.attributions.phi;
  } else {
    input = dc.shap_informed ? select_columns(shared.eval_features, shared.top_columns)
                             : shared.eval_features;
  }
  report.feature_names = dc.shap_informed ? shared.top_features : shared.table.feature_names;
  if (input.cols() != dc.dimensions) {
    throw std::runtime_error("case " + std::to_string(dc.id) + ": expected " +
                             std::to_string(dc.dimensions) + " columns, built " +
                             std::to_string(input.cols()));
  }

  umap::UmapConfig umap_config;
  umap_config.n_neighbors = options.neighbors;
  umap_config.min_dist = options.min_dist;
  umap_config.epochs = options.umap_epochs;
  umap_config.seed = options.seed + static_cast<std::uint64_t>(dc.id) * 0x9e37ULL;

  umap::NeighborGraph graph = umap::knn_graph(input, umap_config.n_neighbors);
  umap::smooth_knn(graph);
  const umap::SparseGraph fuzzy = umap::fuzzy_union(graph);
  if (options.export_fuzzy_graph) {
    umap::write_fuzzy_graph_csv(fuzzy, (out / (prefix + "fuzzy_graph.csv")).string());
  }
  report.embedding = umap::embed(fuzzy, umap_config);
  umap::write_embedding_csv(report.embedding, shared.eval_rows,
                            (out / (prefix + "embedding.csv")).string());
  if (stage == Stage::Embed) {
    report.seconds = seconds_since(t0);
    return report;
  }

  fcm::Config fcm_config;
  fcm_config.clusters = options.clusters;
  fcm_config.fuzziness = options.fuzziness;
  fcm_config.seed = options.seed + static_cast<std::uint64_t>(dc.id) * 0x51dULL;
  report.partition = fcm::fit(report.embedding, fcm_config);
  report.hard_labels = fcm::hard_assign(report.partition);
  fcm::write_partition_csv(report.partition, shared.eval_rows,
                           (out / (prefix + "partition.csv")).string());
  fcm::write_centroids_json(report.partition, (out / (prefix + "centroids.json")).string());
  if (stage == Stage::Cluster) {
    report.seconds = seconds_since(t0);
    return report;
  }

  report.metrics = metrics::all_metrics(shared.truth_bins, report.hard_labels);
  std::ofstream mfile(out / (prefix + "metrics.json"), std::ios::binary);
  mfile << metrics::to_json(report.metrics).dump(2) << '\n';
  report.seconds = seconds_since(t0);
  return report;
}

namespace {

void write_comparison(const std::vector<CaseReport>& reports, const fs::path& out,
                      const Options& options) {
  std::ofstream csv(out / "comparison.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write comparison.csv");
  csv << "metric";
  for (const auto& r : reports) csv << ",case" << r.data_case.id;
  csv << '\n';
  for (const auto& name : metrics::metric_names()) {
    csv << name;
    for (const auto& r : reports) {
      csv << ',' << format_fixed(metrics::metric_value(r.metrics, name), 4);
    }
    csv << '\n';
  }

  nlohmann::json j;
  nlohmann::json case_ids = nlohmann::json::array();
  for (const auto& r : reports) case_ids.push_back(r.data_case.id);
  j["cases"] = case_ids;
  for (const auto& name : metrics::metric_names()) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& r : reports) values.push_back(metrics::metric_value(r.metrics, name));
    j["metrics"][name] = values;
  }
  std::ofstream jf(out / "comparison.json", std::ios::binary);
  jf << j.dump(2) << '\n';

  if (!options.quiet) {
    std::cout << "\nmetric        ";
    for (const auto& r : reports) std::cout << "  case" << r.data_case.id << " ";
    std::cout << '\n';
    for (const auto& name : metrics::metric_names()) {
      std::cout << name;
      for (std::size_t pad = name.size(); pad < 14; ++pad) std::cout << ' ';
      for (const auto& r : reports) {
        std::cout << ' ' << format_fixed(metrics::metric_value(r.metrics, name), 4);
      }
      std::cout << '\n';
    }
  }
}

}  // namespace

RunResult run_all(const Options& options, Stage stage) {
  const auto t0 = Clock::now();
  RunResult result;
  result.shared = prepare_shared(options, stage);
  const fs::path out(options.out_dir);

  nlohmann::json manifest;
  manifest["seed"] = options.seed;
  manifest["config"] = options_to_json(options);
  manifest["metric_conventions"] = {{"log_base", "e"},
                                    {"nmi_normalization", "arithmetic mean of entropies"},
                                    {"output_precision", "4 decimals in comparison.csv"}};
  manifest["dataset"] = {{"path", options.data_path},
                         {"fingerprint", result.shared.dataset_fingerprint},
                         {"rows", result.shared.table.rows()},
                         {"retained_features", result.shared.table.dims()},
                         {"feature_names", result.shared.table.feature_names}};
  manifest["stages"]["ingest"] = {{"seconds", result.shared.ingest_seconds},
                                  {"outputs", {"table.csv", "table_meta.json"}}};

  const bool past_ingest = stage != Stage::Ingest;
  if (past_ingest) {
    manifest["stages"]["train"] = {
        {"seconds", result.shared.train_seconds},
        {"cached", result.shared.model_cached},
        {"train_rmse", result.shared.train_rmse.empty() ? 0.0 : result.shared.train_rmse.back()},
        {"test_rmse", result.shared.test_rmse.empty() ? 0.0 : result.shared.test_rmse.back()},
        {"evaluated_rows", result.shared.eval_rows.size()}};
  }
  const bool past_train = past_ingest && stage != Stage::Train;
  if (past_train) {
    manifest["stages"]["explain"] = {{"seconds", result.shared.explain_seconds},
                                     {"cached", result.shared.attributions_cached},
                                     {"top_features", result.shared.top_features}};
    manifest["top_features"] = result.shared.top_features;
  }

  const bool run_cases = stage == Stage::Embed || stage == Stage::Cluster ||
                         stage == Stage::Validate || stage == Stage::All;
  if (run_cases) {
    for (int id : options.cases) {
      const DataCase dc = data_case(id, static_cast<int>(result.shared.table.dims()),
                                    static_cast<int>(result.shared.top_columns.size()));
      CaseReport report = run_case(result.shared, dc, options, stage);
      log(options, "[case " + std::to_string(id) + "] " + dc.source_name() + ", " +
                       std::to_string(dc.dimensions) + " dims (" +
                       format_fixed(report.seconds, 1) + "s)");
      nlohmann::json case_entry = {{"id", dc.id},
                                   {"source", dc.source_name()},
                                   {"shap_informed", dc.shap_informed},
                                   {"dimensions", dc.dimensions},
                                   {"features", report.feature_names},
                                   {"seconds", report.seconds}};
      const std::string prefix = "case" + std::to_string(dc.id) + "_";
      nlohmann::json outputs = nlohmann::json::array();
      outputs.push_back(prefix + "embedding.csv");
      if (stage != Stage::Embed) {
        outputs.push_back(prefix + "partition.csv");
        outputs.push_back(prefix + "centroids.json");
      }
      if (stage == Stage::Validate || stage == Stage::All) {
        outputs.push_back(prefix + "metrics.json");
      }
      case_entry["outputs"] = std::move(outputs);
      manifest["cases"].push_back(case_entry);
      result.reports.push_back(std::move(report));
    }

    if (stage == Stage::Validate || stage == Stage::All) {
      write_comparison(result.reports, out, options);
      manifest["comparison"] = {"comparison.csv", "comparison.json"};
    }
  }
  manifest["total_seconds"] = seconds_since(t0);

  std::ofstream mf(out / "manifest.json", std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write manifest.json");
  mf << manifest.dump(2) << '\n';
  result.manifest = std::move(manifest);
  return result;
}

nlohmann::json options_to_json(const Options& options) {
  return nlohmann::json{{"data", options.data_path},
                        {"out", options.out_dir},
                        {"seed", options.seed},
                        {"epochs", options.epochs},
                        {"learning_rate", options.learning_rate},
                        {"batch_size", options.batch_size},
                        {"train_fraction", options.train_fraction},
                        {"hidden", options.hidden},
                        {"top_k", options.top_k},
                        {"coalitions", options.coalitions},
                        {"background_rows", options.background_rows},
                        {"neighbors", options.neighbors},
                        {"min_dist", options.min_dist},
                        {"umap_epochs", options.umap_epochs},
                        {"clusters", options.clusters},
                        {"fuzziness", options.fuzziness},
                        {"cases", options.cases},
                        {"truth", options.truth},
                        {"population", options.population},
                        {"cycle_feature", options.cycle_feature},
                        {"threads", options.threads}};
}

}  // namespace phm::pipeline
