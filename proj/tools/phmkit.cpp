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
#include "phm/synthetic.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

/// key=value lines mirroring the long flags; values from the command line
/// keep precedence. '#' starts a comment.
void apply_config_file(const CLI::App* cmd, phm::pipeline::Options& options,
                       const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");

  const auto on_cli = [&](const std::string& flag) { return cmd->count("--" + flag) > 0; };
  const auto to_bool = [](const std::string& v) {
    return v == "1" || v == "true" || v == "yes" || v == "on";
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto first = s.find_first_not_of(" \t\r");
      const auto last = s.find_last_not_of(" \t\r");
      return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (on_cli(key)) continue;  // flags override the file

    if (key == "data") options.data_path = value;
    else if (key == "out") options.out_dir = value;
    else if (key == "seed") options.seed = std::stoull(value);
    else if (key == "epochs") options.epochs = std::stoi(value);
    else if (key == "lr") options.learning_rate = std::stod(value);
    else if (key == "batch-size") options.batch_size = std::stoi(value);
    else if (key == "fraction") options.train_fraction = std::stod(value);
    else if (key == "top-k") options.top_k = std::stoi(value);
    else if (key == "coalitions") options.coalitions = std::stoi(value);
    else if (key == "background") options.background_rows = std::stoi(value);
    else if (key == "neighbors") options.neighbors = std::stoi(value);
    else if (key == "min-dist") options.min_dist = std::stod(value);
    else if (key == "umap-epochs") options.umap_epochs = std::stoi(value);
    else if (key == "clusters") options.clusters = std::stoi(value);
    else if (key == "fuzziness") options.fuzziness = std::stod(value);
    else if (key == "truth") options.truth = value;
    else if (key == "population") options.population = value;
    else if (key == "cycle-feature") options.cycle_feature = to_bool(value);
    else if (key == "threads") options.threads = std::stoi(value);
    else if (key == "force") options.force = to_bool(value);
    else if (key == "export-fuzzy-graph") options.export_fuzzy_graph = to_bool(value);
    else if (key == "quiet") options.quiet = to_bool(value);
    else if (key == "cases") {
      options.cases.clear();
      std::string token;
      std::istringstream cases(value);
      while (std::getline(cases, token, ',')) {
        if (!token.empty()) options.cases.push_back(std::stoi(token));
      }
    } else {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": unknown key '" +
                               key + "'");
    }
  }
  if (options.data_path.empty()) {
    throw std::runtime_error("no dataset given: pass --data or set data= in the config file");
  }
}

/// Every pipeline flag, shared by all stage subcommands.
void add_pipeline_options(CLI::App* cmd, phm::pipeline::Options& options,
                          std::string& config_path) {
  cmd->add_option("--config", config_path, "key=value file mirroring every flag");
  cmd->add_option("--data", options.data_path, "C-MAPSS text file");
  cmd->add_option("--out", options.out_dir, "output directory");
  cmd->add_option("--seed", options.seed, "master random seed");
  cmd->add_option("--epochs", options.epochs, "training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", options.learning_rate, "Adam learning rate");
  cmd->add_option("--batch-size", options.batch_size, "minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--fraction", options.train_fraction, "training fraction of rows");
  cmd->add_option("--top-k", options.top_k, "attribution-ranked features to keep")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--coalitions", options.coalitions,
                  "kernel coalition budget (0 = 2d + 2048)");
  cmd->add_option("--background", options.background_rows, "background sample rows")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--neighbors", options.neighbors, "UMAP nearest neighbors")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-dist", options.min_dist, "UMAP minimum distance");
  cmd->add_option("--umap-epochs", options.umap_epochs, "UMAP layout epochs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--clusters", options.clusters, "fuzzy c-means cluster count")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--fuzziness", options.fuzziness, "fuzzy c-means exponent m");
  cmd->add_option("--cases", options.cases, "data cases to run (subset of 1 2 3 4)")
      ->check(CLI::Range(1, 4));
  cmd->add_option("--truth", options.truth, "ground-truth bins: ann | piecewise")
      ->check(CLI::IsMember({"ann", "piecewise"}));
  cmd->add_option("--population", options.population, "rows to cluster: test | full")
      ->check(CLI::IsMember({"test", "full"}));
  cmd->add_flag("--cycle-feature", options.cycle_feature,
                "expose the cycle number as a model input");
  cmd->add_option("--threads", options.threads, "worker threads (0 = hardware)");
  cmd->add_flag("--force", options.force, "recompute cached model/attribution artifacts");
  cmd->add_flag("--export-fuzzy-graph", options.export_fuzzy_graph,
                "also write the fuzzy neighbor graph per case");
  cmd->add_flag("--quiet", options.quiet, "suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor-constraint PHM toolkit: RUL regression, Shapley attribution,\n"
               "2D manifold reduction, fuzzy c-means binning, cluster validation."};
  app.require_subcommand(1);

  phm::pipeline::Options options;
  using phm::pipeline::Stage;
  struct StageCommand {
    const char* name;
    const char* help;
    Stage stage;
  };
  const StageCommand stage_commands[] = {
      {"ingest", "parse the dataset, drop constant columns, export table + sidecar", Stage::Ingest},
      {"train", "ingest, then train the RUL regressor and export model + RMSE history",
       Stage::Train},
      {"explain", "train, then compute Shapley attributions and the feature ranking",
       Stage::Explain},
      {"embed", "explain, then reduce each selected case to 2D", Stage::Embed},
      {"cluster", "embed, then fuzzy c-means partition each case", Stage::Cluster},
      {"validate", "cluster, then score each case against ground-truth bins", Stage::Validate},
      {"run-all", "the whole pipeline plus the metric-by-case comparison table", Stage::All},
  };
  std::string config_path;
  for (const auto& sc : stage_commands) {
    CLI::App* cmd = app.add_subcommand(sc.name, sc.help);
    add_pipeline_options(cmd, options, config_path);
    cmd->callback([&options, &config_path, cmd, stage = sc.stage] {
      if (!config_path.empty()) {
        apply_config_file(cmd, options, config_path);
      } else if (options.data_path.empty()) {
        throw CLI::RequiredError("--data");
      }
      phm::pipeline::run_all(options, stage);
    });
  }

  phm::synth::SynthConfig synth_config;
  std::string synth_out = "synthetic_cmapss.txt";
  CLI::App* synth = app.add_subcommand(
      "synth", "generate a deterministic run-to-failure dataset in C-MAPSS format");
  synth->add_option("--out", synth_out, "output file");
  synth->add_option("--units", synth_config.units, "number of engines")->check(CLI::PositiveNumber);
  synth->add_option("--min-cycles", synth_config.min_cycles, "shortest trajectory");
  synth->add_option("--max-cycles", synth_config.max_cycles, "longest trajectory");
  synth->add_option("--seed", synth_config.seed, "generator seed");
  synth->callback([&] {
    phm::synth::write_file(synth_out, synth_config);
    std::cout << "wrote " << synth_out << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
