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

namespace phm::cmapss {

/// Engine-cycle rows parsed from a C-MAPSS text file: one row per recorded
/// cycle, features split away from the unit/cycle bookkeeping columns.
/// col_min/col_max always refer to the raw measurement scale; after
/// normalize() they are kept unchanged so values can be inverted back.
struct CycleTable {
  std::vector<int> unit_ids;       // per row, positive
  std::vector<int> cycle_numbers;  // per row, starts at 1 per unit, gap free
  Matrix features;                 // n x d
  std::vector<std::string> feature_names;
  Vector col_min;  // d, raw scale
  Vector col_max;  // d, raw scale
  bool normalized = false;

  Index rows() const { return features.rows(); }
  Index dims() const { return features.cols(); }
};

enum class MaintenanceBin : int { Great = 0, Good = 1, Okay = 2, Schedule = 3 };

constexpr int kBinCount = 4;

const char* bin_name(MaintenanceBin b);

/// Parse a C-MAPSS text file: whitespace separated lines of exactly 26
/// numeric fields (unit, cycle, 3 operational settings, 21 sensors).
/// When cycle_as_feature is set the cycle number is also exposed as the
/// first feature column; unit ids never are.
CycleTable load(const std::string& path, bool cycle_as_feature = false);

/// Same parser over in-memory text, used by tests and the synthetic tool.
CycleTable parse(const std::string& text, bool cycle_as_feature = false);

/// Keep only feature columns whose max exceeds their min. Idempotent.
CycleTable drop_constant_columns(const CycleTable& table);

/// Piecewise RUL target: 125 while the unit is more than 125 cycles from its
/// last recorded cycle A, then A - c down to zero. Requires complete
/// run-to-failure trajectories so that A is the true end of life.
Vector label_rul(const CycleTable& table);

/// Per-unit maximum cycle, keyed by unit id in first-appearance order.
std::vector<std::pair<int, int>> unit_max_cycles(const CycleTable& table);

/// Scale every feature into [-1, 1] with x' = 2(x - min)/(max - min) - 1.
/// The raw min/max stay on the table for inversion.
CycleTable normalize(const CycleTable& table);

Scalar denormalize(Scalar value, Scalar min, Scalar max);

struct Split {
  Matrix train_x;
  Vector train_y;
  Matrix test_x;
  Vector test_y;
  std::vector<Index> train_rows;  // ascending row indices into the source table
  std::vector<Index> test_rows;
};

/// Seeded shuffle split; train gets floor(fraction * n) rows, the rest test.
Split split_train_test(const CycleTable& table, const Vector& labels, Scalar fraction,
                       std::uint64_t seed);

/// RUL range to maintenance bin. Negative inputs are clamped to zero.
/// Boundaries are half open: [125, inf) Great, [75, 125) Good, [50, 75)
/// Okay, [0, 50) Schedule.
MaintenanceBin assign_bin(Scalar rul);

/// CSV with a header row (unit, cycle, feature columns, full precision).
void write_table_csv(const CycleTable& table, const std::string& path);

/// JSON sidecar holding feature names and per-column min/max pairs.
void write_table_sidecar(const CycleTable& table, const std::string& path);

}  // namespace phm::cmapss
