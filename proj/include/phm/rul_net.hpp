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

namespace phm::net {

struct TrainConfig {
  Scalar learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 0;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
};

/// Feedforward regressor with ReLU hidden layers and a single ReLU output
/// unit, plus the Adam moment accumulators that travel with it.
/// weights[l] is dims[l] x dims[l+1]; activations flow as row batches.
struct Regressor {
  std::vector<Index> layer_dims;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<Matrix> adam_m_w, adam_v_w;
  std::vector<Vector> adam_m_b, adam_v_b;
  long step_count = 0;

  Index input_dims() const { return layer_dims.front(); }
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

struct TrainHistory {
  // entry 0 is the untrained model, then one entry per epoch
  std::vector<Scalar> train_rmse;
  std::vector<Scalar> test_rmse;
};

/// Glorot-uniform weights, zero biases, zeroed Adam state. Deterministic in
/// the seed.
Regressor init(const std::vector<Index>& dims, std::uint64_t seed);

/// Row-batch forward pass; returns one nonnegative prediction per row.
Vector forward(const Regressor& model, const Matrix& batch);

/// Mean squared error; RMSE is sqrt of this.
Scalar mse(const Vector& predictions, const Vector& targets);

/// Exact gradients of mse(forward(batch), targets) in every parameter.
Gradients backward(const Regressor& model, const Matrix& batch, const Vector& targets);

/// One Adam update in place; increments step_count.
void adam_step(Regressor& model, const Gradients& grads, const TrainConfig& config);

/// Minibatch Adam training with a seeded shuffle per epoch. Records train
/// and test RMSE each epoch; throws if the loss turns non-finite.
TrainHistory train(Regressor& model, const Matrix& train_x, const Vector& train_y,
                   const Matrix& test_x, const Vector& test_y, const TrainConfig& config);

Vector predict(const Regressor& model, const Matrix& batch);

nlohmann::json to_json(const Regressor& model);
Regressor regressor_from_json(const nlohmann::json& j);

void save(const Regressor& model, const std::string& path, const nlohmann::json& extra);
Regressor load(const std::string& path, nlohmann::json* extra = nullptr);

}  // namespace phm::net
