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

#include "phm/rul_net.hpp"
#include "phm/shapley.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace phm;

namespace {

shap::ModelFn linear_model(const Vector& coeffs, Scalar intercept = 0.0) {
  return [coeffs, intercept](const Matrix& x) -> Vector {
    return (x * coeffs).array() + intercept;
  };
}

shap::ModelFn constant_model(Scalar value) {
  return [value](const Matrix& x) -> Vector { return Vector::Constant(x.rows(), value); };
}

/// Small trained-looking MLP as a nonlinear test subject.
shap::ModelFn mlp_model(Index dims, std::uint64_t seed) {
  auto model = std::make_shared<net::Regressor>(net::init({dims, 8, 4, 1}, seed));
  // lift biases so outputs are not all clamped at zero
  for (auto& b : model->biases) b.array() += 0.3;
  return [model](const Matrix& x) -> Vector { return net::forward(*model, x); };
}

Matrix random_matrix(Index rows, Index cols, Rng& rng, Scalar lo = -1.0, Scalar hi = 1.0) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  }
  return m;
}

}  // namespace

TEST_CASE("coalition_value pins subset features and averages the rest") {
  Rng rng(1);
  const Matrix background = random_matrix(50, 3, rng);
  Vector coeffs(3);
  coeffs << 3.0, -2.0, 0.5;
  const auto model = linear_model(coeffs);
  RowVector row(3);
  row << 2.0, 1.0, -1.0;

  SUBCASE("full subset is exactly the model at the row") {
    const Scalar v = shap::coalition_value(model, row, {true, true, true}, background);
    CHECK(v == doctest::Approx(model(row)(0)).epsilon(1e-12));
  }
  SUBCASE("empty subset is the mean model output over the background") {
    const Scalar v = shap::coalition_value(model, row, {false, false, false}, background);
    CHECK(v == doctest::Approx(model(background).mean()).epsilon(1e-12));
  }
  SUBCASE("closed form for a linear model with centered background") {
    Matrix zeros = Matrix::Zero(10, 3);
    const Scalar v = shap::coalition_value(linear_model(coeffs), row, {true, false, false}, zeros);
    CHECK(v == doctest::Approx(6.0).epsilon(1e-12));  // 3 * 2 + 0 + 0
  }
  SUBCASE("empty background is an error") {
    CHECK_THROWS(shap::coalition_value(model, row, {true, true, true}, Matrix(0, 3)));
  }
}

TEST_CASE("shapley_exact on closed-form models") {
  SUBCASE("linear model with an ignored feature") {
    Vector coeffs(2);
    coeffs << 3.0, 0.0;
    RowVector row(2);
    row << 2.0, 5.0;
    const auto attr = shap::shapley_exact(linear_model(coeffs), row, Matrix::Zero(8, 2));
    CHECK(attr.phi(0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(attr.phi(1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(attr.base_value == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("symmetry: exchangeable features get equal credit") {
    Vector coeffs(2);
    coeffs << 1.0, 1.0;
    RowVector row(2);
    row << 0.7, 0.7;
    Rng rng(3);
    Matrix bg = random_matrix(40, 2, rng);
    // make the background exchangeable too
    Matrix mirrored(80, 2);
    mirrored << bg, bg.rowwise().reverse();
    const auto attr = shap::shapley_exact(linear_model(coeffs), row, mirrored);
    CHECK(attr.phi(0) == doctest::Approx(attr.phi(1)).epsilon(1e-9));
  }
  SUBCASE("dummy: a constant model attributes nothing") {
    Rng rng(4);
    const auto attr =
        shap::shapley_exact(constant_model(7.5), RowVector::Ones(4), random_matrix(20, 4, rng));
    CHECK(attr.phi.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(attr.base_value == doctest::Approx(7.5).epsilon(1e-12));
  }
  SUBCASE("d too large points to the approximation") {
    CHECK_THROWS_WITH_AS(
        shap::shapley_exact(constant_model(0.0), RowVector::Zero(21), Matrix::Zero(4, 21)),
        doctest::Contains("shapley_kernel"), std::invalid_argument);
  }
}

TEST_CASE("shapley_exact satisfies the axioms on a nonlinear model") {
  const Index d = 8;
  Rng rng(42);
  const Matrix background = random_matrix(30, d, rng);
  const auto model = mlp_model(d, 7);

  for (int trial = 0; trial < 5; ++trial) {
    const RowVector row = random_matrix(1, d, rng).row(0);
    const auto attr = shap::shapley_exact(model, row, background);
    // efficiency
    CHECK(attr.base_value + attr.phi.sum() == doctest::Approx(model(row)(0)).epsilon(1e-9));
  }

  SUBCASE("linearity: attributions add across models") {
    Vector c1(d), c2(d);
    for (Index i = 0; i < d; ++i) {
      c1(i) = rng.uniform(-2.0, 2.0);
      c2(i) = rng.uniform(-2.0, 2.0);
    }
    const auto f = linear_model(c1, 0.5);
    const auto g = mlp_model(d, 9);
    const shap::ModelFn sum = [&](const Matrix& x) -> Vector { return f(x) + g(x); };
    const RowVector row = random_matrix(1, d, rng).row(0);
    const auto attr_f = shap::shapley_exact(f, row, background);
    const auto attr_g = shap::shapley_exact(g, row, background);
    const auto attr_sum = shap::shapley_exact(sum, row, background);
    CHECK((attr_sum.phi - attr_f.phi - attr_g.phi).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(attr_sum.base_value ==
          doctest::Approx(attr_f.base_value + attr_g.base_value).epsilon(1e-9));
  }
}

TEST_CASE("shapley_kernel with exhaustive coverage reproduces exact values") {
  const Index d = 8;
  Rng rng(11);
  const Matrix background = random_matrix(25, d, rng);
  const auto model = mlp_model(d, 13);
  const RowVector row = random_matrix(1, d, rng).row(0);

  const auto exact = shap::shapley_exact(model, row, background);
  const auto kernel = shap::shapley_kernel(model, row, background, 1 << d, 99);
  CHECK((kernel.phi - exact.phi).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(kernel.base_value == doctest::Approx(exact.base_value).epsilon(1e-12));

  SUBCASE("constant model gets zero attributions") {
    const auto attr = shap::shapley_kernel(constant_model(3.0), row, background, 64, 4);
    CHECK(attr.phi.cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("deterministic in the seed") {
    const auto a = shap::shapley_kernel(model, row, background, 100, 5);
    const auto b = shap::shapley_kernel(model, row, background, 100, 5);
    CHECK(a.phi == b.phi);
  }
  SUBCASE("budget below d + 2 is rejected") {
    CHECK_THROWS(shap::shapley_kernel(model, row, background, static_cast<int>(d) + 1, 5));
  }
}

TEST_CASE("kernel estimate converges to exact as the budget grows") {
  const Index d = 10;
  Rng rng(21);
  const Matrix background = random_matrix(20, d, rng);
  const auto model = mlp_model(d, 31);
  const RowVector row = random_matrix(1, d, rng).row(0);
  const auto exact = shap::shapley_exact(model, row, background);

  auto error_at = [&](int budget) {
    const auto approx = shap::shapley_kernel(model, row, background, budget, 17);
    return (approx.phi - exact.phi).cwiseAbs().maxCoeff();
  };
  const Scalar coarse = error_at(32);
  const Scalar medium = error_at(256);
  const Scalar full = error_at(1 << d);
  CHECK(full <= 1e-6);
  CHECK(full < coarse);
  CHECK(medium <= coarse * 2.0);  // sampling noise shrinks with budget
}

TEST_CASE("mask plans enumerate what fits and sample the rest") {
  const auto full = shap::make_mask_plan(6, 62, 1);  // 2^6 - 2 = 62 proper masks
  CHECK(full.exhaustive);
  CHECK(full.masks.size() == 62);

  const auto partial = shap::make_mask_plan(10, 200, 1);
  CHECK_FALSE(partial.exhaustive);
  CHECK(partial.masks.size() <= 200);
  // paired sizes 1 and 9 fully present
  int singles = 0;
  for (auto m : partial.masks) {
    if (__builtin_popcountll(m) == 1) ++singles;
  }
  CHECK(singles == 10);
  CHECK(partial.weights.minCoeff() > 0.0);
}

TEST_CASE("attribute_rows shares one plan across rows and threads") {
  const Index d = 6;
  Rng rng(8);
  const Matrix background = random_matrix(15, d, rng);
  const Matrix rows = random_matrix(9, d, rng);
  const auto model = mlp_model(d, 3);
  const std::vector<std::string> names = {"a", "b", "c", "d", "e", "f"};

  const auto attr1 = shap::attribute_rows(model, rows, background, names, 1 << d, 55, 1);
  const auto attr2 = shap::attribute_rows(model, rows, background, names, 1 << d, 55, 2);
  CHECK(attr1.phi == attr2.phi);  // thread count cannot change results

  SUBCASE("rows match the single-row path") {
    const auto single = shap::shapley_kernel(model, rows.row(4), background, 1 << d, 55);
    CHECK((attr1.phi.row(4).transpose() - single.phi).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("local accuracy holds for every row") {
    CHECK(shap::local_accuracy_check(attr1, model, rows) <= 1e-6);
  }
  SUBCASE("corrupting one value breaks local accuracy by that much") {
    auto corrupted = attr1;
    corrupted.phi(2, 3) += 1.0;
    const Scalar residual = shap::local_accuracy_check(corrupted, model, rows);
    CHECK(residual == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("rank_features orders by mean absolute attribution") {
  shap::AttributionMatrix attr;
  attr.feature_names = {"f0", "f1", "f2"};
  attr.phi.resize(2, 3);
  // column means of |phi|: 0.5, 2.0, 1.0
  attr.phi << 0.5, 2.0, -1.0, -0.5, -2.0, 1.0;
  const auto ranking = shap::rank_features(attr);
  CHECK(ranking.names == std::vector<std::string>{"f1", "f2", "f0"});
  CHECK(ranking.scores(0) == 2.0);
  CHECK(ranking.scores(2) == 0.5);

  SUBCASE("all-zero attributions keep the original order") {
    attr.phi.setZero();
    const auto flat = shap::rank_features(attr);
    CHECK(flat.names == std::vector<std::string>{"f0", "f1", "f2"});
  }
  SUBCASE("exact ties stay index-ordered") {
    attr.phi << 1.0, -1.0, 1.0, -1.0, 1.0, -1.0;
    const auto tied = shap::rank_features(attr);
    CHECK(tied.names == std::vector<std::string>{"f0", "f1", "f2"});
  }
}

TEST_CASE("select_top_k slices the ranking") {
  shap::AttributionMatrix attr;
  attr.feature_names.clear();
  attr.phi.resize(1, 18);
  for (Index i = 0; i < 18; ++i) {
    attr.feature_names.push_back("s" + std::to_string(i));
    attr.phi(0, i) = static_cast<Scalar>(18 - i);
  }
  const auto ranking = shap::rank_features(attr);
  const auto top5 = shap::select_top_k(ranking, 5);
  CHECK(top5.size() == 5);
  CHECK(top5.front() == "s0");
  // about a 72% reduction from 18 dimensions
  CHECK(1.0 - 5.0 / 18.0 > 0.70);

  CHECK(shap::select_top_k(ranking, 18).size() == 18);
  CHECK_THROWS(shap::select_top_k(ranking, 0));
  CHECK_THROWS(shap::select_top_k(ranking, 19));
}

TEST_CASE("attribution exports") {
  const auto dir = test::temp_dir("shapley");
  Rng rng(2);
  const auto model = mlp_model(4, 1);
  const Matrix rows = random_matrix(5, 4, rng);
  const auto attr = shap::attribute_rows(model, rows, random_matrix(10, 4, rng),
                                         {"w", "x", "y", "z"}, 64, 3, 1);
  shap::write_attributions_csv(attr, (dir / "a.csv").string());
  shap::write_attributions_json(attr, (dir / "a.json").string());
  const auto ranking = shap::rank_features(attr);
  shap::write_ranking_json(ranking, (dir / "r.json").string());

  const auto csv = test::read_all((dir / "a.csv").string());
  CHECK(csv.rfind("phi_w,phi_x,phi_y,phi_z,base_value", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  const auto j = nlohmann::json::parse(test::read_all((dir / "a.json").string()));
  CHECK(j.at("phi").size() == 5);
  const auto r = nlohmann::json::parse(test::read_all((dir / "r.json").string()));
  CHECK(r.size() == 4);
  CHECK(r.at(0).contains("feature"));
}
