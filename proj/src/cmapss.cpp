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
#include "phm/cmapss.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace phm::cmapss {

namespace {

constexpr int kRawFields = 26;  // unit, cycle, 3 settings, 21 sensors
constexpr Scalar kRulPlateau = 125.0;

std::vector<std::string> raw_feature_names() {
  std::vector<std::string> names;
  for (int i = 1; i <= 3; ++i) names.push_back("setting_" + std::to_string(i));
  for (int i = 1; i <= 21; ++i) names.push_back("s_" + std::to_string(i));
  return names;
}

void refresh_stats(CycleTable& table) {
  if (table.rows() == 0) return;
  table.col_min = table.features.colwise().minCoeff();
  table.col_max = table.features.colwise().maxCoeff();
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("C-MAPSS parse error at line " + std::to_string(line_no) + ": " + what);
}

void check_trajectories(const CycleTable& table) {
  std::map<int, int> last_cycle;
  for (Index r = 0; r < table.rows(); ++r) {
    const int unit = table.unit_ids[static_cast<std::size_t>(r)];
    const int cycle = table.cycle_numbers[static_cast<std::size_t>(r)];
    auto it = last_cycle.find(unit);
    const int expected = it == last_cycle.end() ? 1 : it->second + 1;
    if (cycle != expected) {
      throw std::runtime_error("unit " + std::to_string(unit) + " has cycle " +
                               std::to_string(cycle) + " where " + std::to_string(expected) +
                               " was expected (trajectories must be gap free from cycle 1)");
    }
    last_cycle[unit] = cycle;
  }
}

}  // namespace

const char* bin_name(MaintenanceBin b) {
  switch (b) {
    case MaintenanceBin::Great: return "Great";
    case MaintenanceBin::Good: return "Good";
    case MaintenanceBin::Okay: return "Okay";
    case MaintenanceBin::Schedule: return "Schedule";
  }
  return "?";
}

CycleTable parse(const std::string& text, bool cycle_as_feature) {
  std::vector<std::array<Scalar, kRawFields>> rows;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::array<Scalar, kRawFields> row{};
    int count = 0;
    std::string token;
    while (fields >> token) {
      if (count >= kRawFields) parse_fail(line_no, "more than 26 fields");
      try {
        std::size_t used = 0;
        row[static_cast<std::size_t>(count)] = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        parse_fail(line_no, "non-numeric token '" + token + "'");
      }
      ++count;
    }
    if (count != kRawFields) {
      parse_fail(line_no, "expected 26 fields, found " + std::to_string(count));
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("C-MAPSS input is empty");

  CycleTable table;
  const Index n = static_cast<Index>(rows.size());
  const int base = cycle_as_feature ? 1 : 0;
  const Index d = kRawFields - 2 + base;
  table.features.resize(n, d);
  table.feature_names = raw_feature_names();
  if (cycle_as_feature) table.feature_names.insert(table.feature_names.begin(), "cycle");
  table.unit_ids.resize(rows.size());
  table.cycle_numbers.resize(rows.size());
  for (Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    const Scalar unit = row[0];
    const Scalar cycle = row[1];
    if (unit < 1 || unit != std::floor(unit)) parse_fail(static_cast<std::size_t>(r) + 1, "unit id must be a positive integer");
    if (cycle < 1 || cycle != std::floor(cycle)) parse_fail(static_cast<std::size_t>(r) + 1, "cycle number must be a positive integer");
    table.unit_ids[static_cast<std::size_t>(r)] = static_cast<int>(unit);
    table.cycle_numbers[static_cast<std::size_t>(r)] = static_cast<int>(cycle);
    if (cycle_as_feature) table.features(r, 0) = cycle;
    for (int c = 2; c < kRawFields; ++c) table.features(r, base + c - 2) = row[static_cast<std::size_t>(c)];
  }
  check_trajectories(table);
  refresh_stats(table);
  return table;
}

CycleTable load(const std::string& path, bool cycle_as_feature) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), cycle_as_feature);
}

CycleTable drop_constant_columns(const CycleTable& table) {
  if (table.rows() == 0) throw std::invalid_argument("drop_constant_columns: empty table");
  std::vector<Index> keep;
  for (Index c = 0; c < table.dims(); ++c) {
    if (table.col_max(c) > table.col_min(c)) keep.push_back(c);
  }
  if (keep.empty()) throw std::runtime_error("all feature columns are constant; nothing to model");
  if (static_cast<Index>(keep.size()) == table.dims()) return table;

  CycleTable out;
  out.unit_ids = table.unit_ids;
  out.cycle_numbers = table.cycle_numbers;
  out.normalized = table.normalized;
  out.features.resize(table.rows(), static_cast<Index>(keep.size()));
  out.col_min.resize(static_cast<Index>(keep.size()));
  out.col_max.resize(static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const Index c = keep[i];
    out.features.col(static_cast<Index>(i)) = table.features.col(c);
    out.col_min(static_cast<Index>(i)) = table.col_min(c);
    out.col_max(static_cast<Index>(i)) = table.col_max(c);
    out.feature_names.push_back(table.feature_names[static_cast<std::size_t>(c)]);
  }
  return out;
}

std::vector<std::pair<int, int>> unit_max_cycles(const CycleTable& table) {
  std::vector<std::pair<int, int>> result;
  std::map<int, std::size_t> slot;
  for (std::size_t r = 0; r < table.unit_ids.size(); ++r) {
    const int unit = table.unit_ids[r];
    const int cycle = table.cycle_numbers[r];
    auto it = slot.find(unit);
    if (it == slot.end()) {
      slot[unit] = result.size();
      result.emplace_back(unit, cycle);
    } else {
      result[it->second].second = std::max(result[it->second].second, cycle);
    }
  }
  return result;
}

Vector label_rul(const CycleTable& table) {
  std::map<int, int> max_cycle;
  for (const auto& [unit, a] : unit_max_cycles(table)) max_cycle[unit] = a;
  Vector labels(table.rows());
  for (Index r = 0; r < table.rows(); ++r) {
    const int a = max_cycle[table.unit_ids[static_cast<std::size_t>(r)]];
    const int c = table.cycle_numbers[static_cast<std::size_t>(r)];
    labels(r) = c <= a - static_cast<int>(kRulPlateau) ? kRulPlateau : static_cast<Scalar>(a - c);
  }
  return labels;
}

CycleTable normalize(const CycleTable& table) {
  if (table.normalized) throw std::invalid_argument("normalize: table is already normalized");
  for (Index c = 0; c < table.dims(); ++c) {
    if (!(table.col_max(c) > table.col_min(c))) {
      throw std::invalid_argument("normalize: column '" +
                                  table.feature_names[static_cast<std::size_t>(c)] +
                                  "' has zero range; drop constant columns first");
    }
  }
  CycleTable out = table;
  const RowVector lo = table.col_min.transpose();
  const RowVector range = (table.col_max - table.col_min).transpose();
  out.features = ((table.features.rowwise() - lo).array().rowwise() / range.array()) * 2.0 - 1.0;
  out.normalized = true;
  return out;
}

Scalar denormalize(Scalar value, Scalar min, Scalar max) {
  if (!(max > min)) throw std::invalid_argument("denormalize: max must exceed min");
  return (value + 1.0) * (max - min) / 2.0 + min;
}

Split split_train_test(const CycleTable& table, const Vector& labels, Scalar fraction,
                       std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split_train_test: fraction must lie in (0, 1)");
  }
  if (labels.size() != table.rows()) {
    throw std::invalid_argument("split_train_test: labels and table row counts differ");
  }
  const Index n = table.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const Index n_train = static_cast<Index>(std::floor(fraction * static_cast<Scalar>(n)));
  Split split;
  split.train_rows.assign(order.begin(), order.begin() + n_train);
  split.test_rows.assign(order.begin() + n_train, order.end());
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());

  split.train_x.resize(n_train, table.dims());
  split.train_y.resize(n_train);
  split.test_x.resize(n - n_train, table.dims());
  split.test_y.resize(n - n_train);
  for (Index i = 0; i < n_train; ++i) {
    split.train_x.row(i) = table.features.row(split.train_rows[static_cast<std::size_t>(i)]);
    split.train_y(i) = labels(split.train_rows[static_cast<std::size_t>(i)]);
  }
  for (Index i = 0; i < n - n_train; ++i) {
    split.test_x.row(i) = table.features.row(split.test_rows[static_cast<std::size_t>(i)]);
    split.test_y(i) = labels(split.test_rows[static_cast<std::size_t>(i)]);
  }
  return split;
}

MaintenanceBin assign_bin(Scalar rul) {
  if (rul < 0.0) rul = 0.0;
  if (rul >= 125.0) return MaintenanceBin::Great;
  if (rul >= 75.0) return MaintenanceBin::Good;
  if (rul >= 50.0) return MaintenanceBin::Okay;
  return MaintenanceBin::Schedule;
}

void write_table_csv(const CycleTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "unit,cycle";
  for (const auto& name : table.feature_names) out << ',' << name;
  out << '\n';
  for (Index r = 0; r < table.rows(); ++r) {
    out << table.unit_ids[static_cast<std::size_t>(r)] << ','
        << table.cycle_numbers[static_cast<std::size_t>(r)];
    for (Index c = 0; c < table.dims(); ++c) out << ',' << format_double(table.features(r, c));
    out << '\n';
  }
}

void write_table_sidecar(const CycleTable& table, const std::string& path) {
  nlohmann::json j;
  j["feature_names"] = table.feature_names;
  j["rows"] = table.rows();
  j["normalized"] = table.normalized;
  std::vector<Scalar> lo(table.col_min.data(), table.col_min.data() + table.col_min.size());
  std::vector<Scalar> hi(table.col_max.data(), table.col_max.data() + table.col_max.size());
  j["min"] = lo;
  j["max"] = hi;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace phm::cmapss
