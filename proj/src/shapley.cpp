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
#include "phm/shapley.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

namespace phm::shap {

namespace {

constexpr int kExactLimit = 20;

Scalar binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  Scalar result = 1.0;
  for (int i = 1; i <= k; ++i) result = result * static_cast<Scalar>(n - k + i) / static_cast<Scalar>(i);
  return result;
}

/// Shapley kernel weight of one mask of size s among d features.
Scalar kernel_weight(int d, int s) {
  return static_cast<Scalar>(d - 1) / (binomial(d, s) * static_cast<Scalar>(s) * static_cast<Scalar>(d - s));
}

/// Evaluate coalition values for a block of masks against one row: feature
/// bits set in the mask come from the row, the rest from each background
/// sample, averaged over the background.
void coalition_values(const ModelFn& model, const RowVector& row, const Matrix& background,
                      const std::uint64_t* masks, Index count, Scalar* out, Matrix& scratch) {
  const Index m = background.rows();
  const Index d = background.cols();
  // small chunks keep the synthetic block and its activations cache-resident
  constexpr Index kChunk = 64;
  for (Index start = 0; start < count; start += kChunk) {
    const Index block = std::min(kChunk, count - start);
    scratch.resize(block * m, d);
    for (Index k = 0; k < block; ++k) {
      const std::uint64_t mask = masks[start + k];
      auto rows = scratch.middleRows(k * m, m);
      rows = background;
      for (Index j = 0; j < d; ++j) {
        if (mask >> j & 1) rows.col(j).setConstant(row(j));
      }
    }
    const Vector values = model(scratch);
    if (values.size() != block * m) {
      throw std::runtime_error("model returned wrong number of predictions");
    }
    for (Index k = 0; k < block; ++k) {
      out[start + k] = values.segment(k * m, m).mean();
    }
  }
}

void check_background(const Matrix& background, Index d) {
  if (background.rows() == 0) throw std::invalid_argument("background must be nonempty");
  if (background.cols() != d) {
    throw std::invalid_argument("background feature count does not match the row");
  }
}

/// Weighted least-squares solve of the kernel regression with the
/// efficiency constraint eliminated into the last feature.
struct KernelSolver {
  Index d = 0;
  Vector sqrt_w;
  Eigen::ColPivHouseholderQR<Matrix> qr;
  std::vector<char> last_bit;  // per mask: does it contain feature d-1

  KernelSolver(const MaskPlan& plan) : d(plan.dims) {
    const Index k = static_cast<Index>(plan.masks.size());
    if (d >= 2) {
      if (k < d) {
        throw std::runtime_error(
            "kernel regression system is singular; increase n_coalitions");
      }
      sqrt_w = plan.weights.cwiseSqrt();
      Matrix a(k, d - 1);
      last_bit.resize(static_cast<std::size_t>(k));
      for (Index r = 0; r < k; ++r) {
        const std::uint64_t mask = plan.masks[static_cast<std::size_t>(r)];
        const Scalar zd = static_cast<Scalar>(mask >> (d - 1) & 1);
        last_bit[static_cast<std::size_t>(r)] = static_cast<char>(mask >> (d - 1) & 1);
        for (Index j = 0; j + 1 < d; ++j) {
          a(r, j) = (static_cast<Scalar>(mask >> j & 1) - zd) * sqrt_w(r);
        }
      }
      qr.compute(a);
      if (qr.rank() < d - 1) {
        throw std::runtime_error(
            "kernel regression system is singular; increase n_coalitions");
      }
    }
  }

  /// values: coalition value per mask; fx: model(row); base: E[f].
  Vector solve(const Vector& values, Scalar fx, Scalar base) const {
    Vector phi(d);
    const Scalar total = fx - base;
    if (d == 1) {
      phi(0) = total;
      return phi;
    }
    const Index k = values.size();
    Vector rhs(k);
    for (Index r = 0; r < k; ++r) {
      const Scalar zd = static_cast<Scalar>(last_bit[static_cast<std::size_t>(r)]);
      rhs(r) = (values(r) - base - zd * total) * sqrt_w(r);
    }
    phi.head(d - 1) = qr.solve(rhs);
    phi(d - 1) = total - phi.head(d - 1).sum();
    return phi;
  }
};

}  // namespace

Scalar coalition_value(const ModelFn& model, const RowVector& row,
                       const std::vector<bool>& subset, const Matrix& background) {
  const Index d = row.size();
  check_background(background, d);
  if (static_cast<Index>(subset.size()) != d) {
    throw std::invalid_argument("coalition_value: subset size does not match feature count");
  }
  std::uint64_t mask = 0;
  for (Index j = 0; j < d; ++j) {
    if (subset[static_cast<std::size_t>(j)]) mask |= 1ULL << j;
  }
  Scalar value = 0.0;
  Matrix scratch;
  coalition_values(model, row, background, &mask, 1, &value, scratch);
  return value;
}

Attribution shapley_exact(const ModelFn& model, const RowVector& row, const Matrix& background) {
  const Index d = row.size();
  check_background(background, d);
  if (d > kExactLimit) {
    throw std::invalid_argument("shapley_exact: " + std::to_string(d) +
                                " features need 2^d coalition evaluations; use shapley_kernel");
  }
  const std::uint64_t n_masks = 1ULL << d;
  std::vector<std::uint64_t> masks(n_masks);
  std::iota(masks.begin(), masks.end(), 0ULL);
  std::vector<Scalar> v(n_masks);
  Matrix scratch;
  coalition_values(model, row, background, masks.data(), static_cast<Index>(n_masks), v.data(),
                   scratch);

  // phi_i = sum over S not containing i of |S|!(d-|S|-1)!/d! (v[S+i] - v[S])
  std::vector<Scalar> weight(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) {
    weight[static_cast<std::size_t>(s)] =
        1.0 / (static_cast<Scalar>(d) * binomial(static_cast<int>(d) - 1, s));
  }
  Attribution result;
  result.base_value = v[0];
  result.phi = Vector::Zero(d);
  for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
    const int s = std::popcount(mask);
    for (Index i = 0; i < d; ++i) {
      if (mask >> i & 1) continue;
      result.phi(i) += weight[static_cast<std::size_t>(s)] * (v[mask | 1ULL << i] - v[mask]);
    }
  }
  return result;
}

MaskPlan make_mask_plan(int dims, int n_coalitions, std::uint64_t seed) {
  if (dims < 1) throw std::invalid_argument("make_mask_plan: dims must be >= 1");
  if (dims > 62) throw std::invalid_argument("make_mask_plan: more than 62 features unsupported");
  MaskPlan plan;
  plan.dims = dims;
  if (dims == 1) {
    plan.exhaustive = true;
    return plan;
  }

  const Scalar proper = std::pow(2.0, dims) - 2.0;
  std::vector<Scalar> mass(static_cast<std::size_t>(dims));  // kernel mass per subset size
  for (int s = 1; s < dims; ++s) {
    mass[static_cast<std::size_t>(s)] = static_cast<Scalar>(dims - 1) /
                                        (static_cast<Scalar>(s) * static_cast<Scalar>(dims - s));
  }

  std::vector<Scalar> weights;
  auto enumerate_size = [&](int s) {
    // all subsets of size s in lexicographic bit order
    std::uint64_t mask = (1ULL << s) - 1;
    const std::uint64_t top = 1ULL << dims;
    const Scalar w = kernel_weight(dims, s);
    while (mask < top) {
      plan.masks.push_back(mask);
      weights.push_back(w);
      // Gosper's hack: next subset with the same popcount
      const std::uint64_t c = mask & (~mask + 1);
      const std::uint64_t r = mask + c;
      mask = (((r ^ mask) >> 2) / c) | r;
    }
  };
  auto seal = [&]() {
    plan.weights = Eigen::Map<const Vector>(weights.data(), static_cast<Index>(weights.size()));
  };

  if (static_cast<Scalar>(n_coalitions) >= proper) {
    for (int s = 1; s < dims; ++s) enumerate_size(s);
    plan.exhaustive = true;
    seal();
    return plan;
  }

  // Fully enumerate paired sizes (1, d-1), (2, d-2), ... while they fit.
  std::vector<bool> enumerated(static_cast<std::size_t>(dims), false);
  long long budget = n_coalitions;
  for (int s = 1; s <= (dims - 1) / 2 + ((dims % 2 == 0) ? 1 : 0); ++s) {
    const int partner = dims - s;
    Scalar count = binomial(dims, s);
    if (partner != s) count += binomial(dims, partner);
    if (count > static_cast<Scalar>(budget)) break;
    enumerate_size(s);
    enumerated[static_cast<std::size_t>(s)] = true;
    if (partner != s) {
      enumerate_size(partner);
      enumerated[static_cast<std::size_t>(partner)] = true;
    }
    budget -= static_cast<long long>(count);
  }

  // Sample the remaining sizes from the kernel distribution.
  std::vector<int> open_sizes;
  Scalar open_mass = 0.0;
  for (int s = 1; s < dims; ++s) {
    if (!enumerated[static_cast<std::size_t>(s)]) {
      open_sizes.push_back(s);
      open_mass += mass[static_cast<std::size_t>(s)];
    }
  }
  if (budget > 0 && !open_sizes.empty()) {
    std::vector<Scalar> cdf;
    Scalar acc = 0.0;
    for (int s : open_sizes) {
      acc += mass[static_cast<std::size_t>(s)] / open_mass;
      cdf.push_back(acc);
    }
    Rng rng(seed);
    std::vector<Index> deck(static_cast<std::size_t>(dims));
    std::iota(deck.begin(), deck.end(), Index{0});
    const Scalar sample_weight = open_mass / static_cast<Scalar>(budget);
    for (long long k = 0; k < budget; ++k) {
      const Scalar u = rng.uniform();
      const std::size_t pick = static_cast<std::size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const int s = open_sizes[std::min(pick, open_sizes.size() - 1)];
      // partial Fisher-Yates draw of s distinct feature indices
      for (int i = 0; i < s; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(dims - i)));
        std::swap(deck[static_cast<std::size_t>(i)], deck[j]);
      }
      std::uint64_t mask = 0;
      for (int i = 0; i < s; ++i) mask |= 1ULL << deck[static_cast<std::size_t>(i)];
      plan.masks.push_back(mask);
      weights.push_back(sample_weight);
    }
  }
  seal();
  return plan;
}

Attribution shapley_kernel(const ModelFn& model, const RowVector& row, const Matrix& background,
                           int n_coalitions, std::uint64_t seed) {
  const Index d = row.size();
  check_background(background, d);
  if (n_coalitions < d + 2) {
    throw std::invalid_argument("shapley_kernel: n_coalitions must be at least d + 2");
  }
  const MaskPlan plan = make_mask_plan(static_cast<int>(d), n_coalitions, seed);
  const KernelSolver solver(plan);

  Attribution result;
  result.base_value = model(background).mean();
  const Scalar fx = model(row)(0);
  Vector values(static_cast<Index>(plan.masks.size()));
  Matrix scratch;
  if (!plan.masks.empty()) {
    coalition_values(model, row, background, plan.masks.data(),
                     static_cast<Index>(plan.masks.size()), values.data(), scratch);
  }
  result.phi = solver.solve(values, fx, result.base_value);
  return result;
}

AttributionMatrix attribute_rows(const ModelFn& model, const Matrix& rows, const Matrix& background,
                                 const std::vector<std::string>& feature_names, int n_coalitions,
                                 std::uint64_t seed, int threads) {
  const Index d = rows.cols();
  const Index n = rows.rows();
  check_background(background, d);
  if (n == 0) throw std::invalid_argument("attribute_rows: no rows");
  if (n_coalitions < d + 2) {
    throw std::invalid_argument("attribute_rows: n_coalitions must be at least d + 2");
  }
  const MaskPlan plan = make_mask_plan(static_cast<int>(d), n_coalitions, seed);
  const KernelSolver solver(plan);

  AttributionMatrix result;
  result.background = background;
  result.feature_names = feature_names;
  result.base_value = model(background).mean();
  result.phi.resize(n, d);

  const Vector fx = model(rows);
  parallel_for(
      n,
      [&](Index i) {
        thread_local Matrix scratch;
        thread_local Vector values;
        values.resize(static_cast<Index>(plan.masks.size()));
        if (!plan.masks.empty()) {
          coalition_values(model, rows.row(i), background, plan.masks.data(),
                           static_cast<Index>(plan.masks.size()), values.data(), scratch);
        }
        result.phi.row(i) = solver.solve(values, fx(i), result.base_value).transpose();
      },
      threads);
  return result;
}

Scalar local_accuracy_check(const AttributionMatrix& attributions, const ModelFn& model,
                            const Matrix& rows) {
  if (rows.rows() != attributions.phi.rows()) {
    throw std::invalid_argument("local_accuracy_check: row count mismatch");
  }
  const Vector fx = model(rows);
  Scalar worst = 0.0;
  for (Index i = 0; i < rows.rows(); ++i) {
    worst = std::max(worst,
                     std::abs(attributions.base_value + attributions.phi.row(i).sum() - fx(i)));
  }
  return worst;
}

FeatureRanking rank_features(const AttributionMatrix& attributions) {
  if (attributions.phi.rows() == 0) throw std::invalid_argument("rank_features: empty attributions");
  const Vector scores = attributions.phi.cwiseAbs().colwise().mean().transpose();
  FeatureRanking ranking;
  ranking.indices.resize(static_cast<std::size_t>(scores.size()));
  std::iota(ranking.indices.begin(), ranking.indices.end(), Index{0});
  std::stable_sort(ranking.indices.begin(), ranking.indices.end(), [&](Index a, Index b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  ranking.scores.resize(scores.size());
  for (std::size_t i = 0; i < ranking.indices.size(); ++i) {
    ranking.scores(static_cast<Index>(i)) = scores(ranking.indices[i]);
    const std::size_t col = static_cast<std::size_t>(ranking.indices[i]);
    ranking.names.push_back(col < attributions.feature_names.size()
                                ? attributions.feature_names[col]
                                : "f" + std::to_string(col));
  }
  return ranking;
}

std::vector<std::string> select_top_k(const FeatureRanking& ranking, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > ranking.names.size()) {
    throw std::invalid_argument("select_top_k: k must lie in [1, d]");
  }
  return {ranking.names.begin(), ranking.names.begin() + k};
}

void write_attributions_csv(const AttributionMatrix& attributions, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (std::size_t c = 0; c < attributions.feature_names.size(); ++c) {
    out << "phi_" << attributions.feature_names[c] << ',';
  }
  out << "base_value\n";
  for (Index r = 0; r < attributions.phi.rows(); ++r) {
    for (Index c = 0; c < attributions.phi.cols(); ++c) {
      out << format_double(attributions.phi(r, c)) << ',';
    }
    out << format_double(attributions.base_value) << '\n';
  }
}

void write_attributions_json(const AttributionMatrix& attributions, const std::string& path) {
  nlohmann::json j;
  j["feature_names"] = attributions.feature_names;
  j["base_value"] = attributions.base_value;
  nlohmann::json phi = nlohmann::json::array();
  for (Index r = 0; r < attributions.phi.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < attributions.phi.cols(); ++c) row.push_back(attributions.phi(r, c));
    phi.push_back(std::move(row));
  }
  j["phi"] = std::move(phi);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump() << '\n';
}

void write_ranking_json(const FeatureRanking& ranking, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < ranking.names.size(); ++i) {
    j.push_back({{"feature", ranking.names[i]},
                 {"score", ranking.scores(static_cast<Index>(i))},
                 {"index", ranking.indices[i]}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace phm::shap
