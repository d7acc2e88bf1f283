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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phm/cmapss.hpp"
#include "phm/synthetic.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <set>

using namespace phm;
using cmapss::MaintenanceBin;

namespace {

Scalar varied(int unit, int cycle, int f) {
  // every column varies, deterministic and cheap
  return static_cast<Scalar>(f) + 0.01 * static_cast<Scalar>(cycle) +
         0.001 * static_cast<Scalar>(unit * (f + 1));
}

}  // namespace

TEST_CASE("parse accepts well-formed 26-field lines") {
  const auto table = cmapss::parse(test::cmapss_text({2}, varied));
  CHECK(table.rows() == 2);
  CHECK(table.dims() == 24);
  CHECK(table.feature_names.front() == "setting_1");
  CHECK(table.feature_names.back() == "s_21");
  CHECK(table.unit_ids == std::vector<int>{1, 1});
  CHECK(table.cycle_numbers == std::vector<int>{1, 2});
}

TEST_CASE("parse exposes the cycle number as a feature only on request") {
  const auto table = cmapss::parse(test::cmapss_text({3}, varied), true);
  CHECK(table.dims() == 25);
  CHECK(table.feature_names.front() == "cycle");
  CHECK(table.features(2, 0) == 3.0);
}

TEST_CASE("parse rejects malformed input with the offending line") {
  SUBCASE("wrong field count") {
    std::string text = test::cmapss_text({2}, varied);
    // chop the final field off line 2
    text.pop_back();
    text.erase(text.rfind(' '));
    text += '\n';
    CHECK_THROWS_WITH_AS(cmapss::parse(text), doctest::Contains("line 2"), std::runtime_error);
  }
  SUBCASE("non-numeric token") {
    std::string text = test::cmapss_text({1}, varied);
    text.replace(text.find(" 5."), 3, " z.");
    CHECK_THROWS_WITH_AS(cmapss::parse(text), doctest::Contains("line 1"), std::runtime_error);
  }
  SUBCASE("empty input") { CHECK_THROWS(cmapss::parse("")); }
  SUBCASE("gap in a trajectory") {
    std::string good = test::cmapss_text({3}, varied);
    // drop the middle line of the unit
    const auto first_end = good.find('\n');
    const auto second_end = good.find('\n', first_end + 1);
    good.erase(first_end + 1, second_end - first_end);
    CHECK_THROWS(cmapss::parse(good));
  }
}

TEST_CASE("load parses the real FD001 file when provided" *
          doctest::skip(test::fd001_path().empty())) {
  const auto table = cmapss::load(test::fd001_path());
  CHECK(table.rows() == 20631);
  const auto retained = cmapss::drop_constant_columns(table);
  // regression pin: 24 raw features minus the 7 flat columns
  CHECK(retained.dims() == 17);
}

TEST_CASE("drop_constant_columns keeps exactly the non-flat columns in order") {
  const auto table = cmapss::parse(test::cmapss_text(
      {4}, [](int unit, int cycle, int f) { return f == 5 ? 1.0 : varied(unit, cycle, f); }));
  const auto kept = cmapss::drop_constant_columns(table);
  CHECK(kept.dims() == 23);
  for (const auto& name : kept.feature_names) CHECK(name != "s_3");  // feature 5 is sensor 3
  // order preserved
  CHECK(kept.feature_names[4] == "s_2");
  CHECK(kept.feature_names[5] == "s_4");

  SUBCASE("identity when nothing is constant") {
    const auto all = cmapss::parse(test::cmapss_text({4}, varied));
    const auto out = cmapss::drop_constant_columns(all);
    CHECK(out.dims() == all.dims());
    CHECK(out.feature_names == all.feature_names);
  }
  SUBCASE("idempotent") {
    const auto twice = cmapss::drop_constant_columns(kept);
    CHECK(twice.feature_names == kept.feature_names);
    CHECK(twice.features == kept.features);
  }
  SUBCASE("all constant is an error") {
    const auto flat = cmapss::parse(test::cmapss_text(
        {3}, [](int, int, int f) { return static_cast<Scalar>(f); }));
    CHECK_THROWS(cmapss::drop_constant_columns(flat));
  }
}

TEST_CASE("synthetic surrogate retains 17 of 24 feature columns") {
  synth::SynthConfig config;
  config.units = 6;
  config.min_cycles = 30;
  config.max_cycles = 60;
  const auto table = cmapss::drop_constant_columns(cmapss::parse(synth::generate(config)));
  CHECK(table.dims() == 17);
}

TEST_CASE("label_rul implements the 125-cycle plateau") {
  // one unit with 300 cycles
  const auto table = cmapss::parse(test::cmapss_text({300}, varied));
  const Vector labels = cmapss::label_rul(table);
  CHECK(labels(99) == 125.0);   // c=100, plateau
  CHECK(labels(249) == 50.0);   // c=250, linear branch
  CHECK(labels(299) == 0.0);    // c=300, end of life
  CHECK(labels(174) == 125.0);  // c=175 = A-125, still plateau
  CHECK(labels(175) == 124.0);  // first linear cycle

  SUBCASE("non-increasing per unit, zero at the last cycle") {
    const auto multi = cmapss::parse(test::cmapss_text({140, 37, 210}, varied));
    const Vector rul = cmapss::label_rul(multi);
    Index row = 0;
    for (int len : {140, 37, 210}) {
      for (int c = 1; c < len; ++c) CHECK(rul(row + c) <= rul(row + c - 1));
      CHECK(rul(row + len - 1) == 0.0);
      CHECK(rul.segment(row, len).maxCoeff() <= 125.0);
      row += len;
    }
  }
}

TEST_CASE("normalize maps into [-1, 1] and keeps stats for inversion") {
  const auto table = cmapss::parse(test::cmapss_text({50}, varied));
  const auto normalized = cmapss::normalize(table);
  CHECK(normalized.features.minCoeff() >= -1.0);
  CHECK(normalized.features.maxCoeff() <= 1.0);
  for (Index c = 0; c < normalized.dims(); ++c) {
    CHECK(normalized.features.col(c).minCoeff() == -1.0);
    CHECK(normalized.features.col(c).maxCoeff() == 1.0);
  }

  SUBCASE("midpoint maps to zero") {
    CHECK(2.0 * (5.0 - 0.0) / (10.0 - 0.0) - 1.0 == 0.0);
  }
  SUBCASE("round-trip within 1e-12") {
    for (Index c = 0; c < table.dims(); ++c) {
      for (Index r = 0; r < table.rows(); ++r) {
        const Scalar back =
            cmapss::denormalize(normalized.features(r, c), table.col_min(c), table.col_max(c));
        CHECK(back == doctest::Approx(table.features(r, c)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("zero-range column is an error") {
    const auto flat = cmapss::parse(test::cmapss_text(
        {3}, [](int unit, int cycle, int f) { return f == 0 ? 7.0 : varied(unit, cycle, f); }));
    CHECK_THROWS(cmapss::normalize(flat));
  }
}

TEST_CASE("denormalize inverts the affine map") {
  CHECK(cmapss::denormalize(0.0, 0.0, 10.0) == 5.0);
  CHECK(cmapss::denormalize(1.0, -3.0, 12.0) == 12.0);
  CHECK(cmapss::denormalize(-1.0, -3.0, 12.0) == -3.0);
  CHECK_THROWS(cmapss::denormalize(0.0, 5.0, 5.0));
}

TEST_CASE("split_train_test is deterministic, disjoint and exhaustive") {
  const auto table = cmapss::parse(test::cmapss_text({120, 80}, varied));
  const Vector labels = cmapss::label_rul(table);

  SUBCASE("80/20 sizes use floor") {
    const auto split = cmapss::split_train_test(table, labels, 0.8, 11);
    CHECK(split.train_x.rows() == 160);  // floor(0.8 * 200)
    CHECK(split.test_x.rows() == 40);
  }
  SUBCASE("fraction 0.5 of 4 rows gives 2/2") {
    const auto tiny = cmapss::parse(test::cmapss_text({4}, varied));
    const auto split = cmapss::split_train_test(tiny, cmapss::label_rul(tiny), 0.5, 1);
    CHECK(split.train_rows.size() == 2);
    CHECK(split.test_rows.size() == 2);
  }
  SUBCASE("same seed twice is identical") {
    const auto a = cmapss::split_train_test(table, labels, 0.8, 99);
    const auto b = cmapss::split_train_test(table, labels, 0.8, 99);
    CHECK(a.train_rows == b.train_rows);
    CHECK(a.test_rows == b.test_rows);
    CHECK(a.train_x == b.train_x);
  }
  SUBCASE("partition covers every row exactly once") {
    const auto split = cmapss::split_train_test(table, labels, 0.7, 5);
    std::set<Index> seen(split.train_rows.begin(), split.train_rows.end());
    seen.insert(split.test_rows.begin(), split.test_rows.end());
    CHECK(seen.size() == 200);
    CHECK(split.train_rows.size() + split.test_rows.size() == 200);
  }
  SUBCASE("bad fraction") {
    CHECK_THROWS(cmapss::split_train_test(table, labels, 0.0, 1));
    CHECK_THROWS(cmapss::split_train_test(table, labels, 1.0, 1));
  }
}

TEST_CASE("assign_bin boundaries follow the maintenance table") {
  CHECK(cmapss::assign_bin(130.0) == MaintenanceBin::Great);
  CHECK(cmapss::assign_bin(100.0) == MaintenanceBin::Good);
  CHECK(cmapss::assign_bin(60.0) == MaintenanceBin::Okay);
  CHECK(cmapss::assign_bin(20.0) == MaintenanceBin::Schedule);
  // half-open boundaries, exact
  CHECK(cmapss::assign_bin(125.0) == MaintenanceBin::Great);
  CHECK(cmapss::assign_bin(75.0) == MaintenanceBin::Good);
  CHECK(cmapss::assign_bin(50.0) == MaintenanceBin::Okay);
  CHECK(cmapss::assign_bin(49.9999) == MaintenanceBin::Schedule);
  // negatives clamp to zero
  CHECK(cmapss::assign_bin(-3.0) == MaintenanceBin::Schedule);

  SUBCASE("total on a sweep") {
    for (Scalar rul = -10.0; rul <= 200.0; rul += 0.37) {
      const auto bin = cmapss::assign_bin(rul);
      CHECK(static_cast<int>(bin) >= 0);
      CHECK(static_cast<int>(bin) < cmapss::kBinCount);
    }
  }
}

TEST_CASE("table csv and sidecar exports round out the ingest interface") {
  const auto dir = test::temp_dir("cmapss_io");
  const auto table = cmapss::parse(test::cmapss_text({5}, varied));
  cmapss::write_table_csv(table, (dir / "t.csv").string());
  cmapss::write_table_sidecar(table, (dir / "t.json").string());
  const std::string csv = test::read_all((dir / "t.csv").string());
  CHECK(csv.substr(0, 10) == "unit,cycle");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + 5 rows
  const std::string sidecar = test::read_all((dir / "t.json").string());
  CHECK(sidecar.find("\"feature_names\"") != std::string::npos);
  CHECK(sidecar.find("\"min\"") != std::string::npos);
}
