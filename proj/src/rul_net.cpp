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
#include "phm/rul_net.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace phm::net {

namespace {

void check_shapes(const Regressor& model, const Gradients& grads) {
  if (grads.weights.size() != model.weights.size() || grads.biases.size() != model.biases.size()) {
    throw std::invalid_argument("adam_step: gradient layer count does not match model");
  }
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    if (grads.weights[l].rows() != model.weights[l].rows() ||
        grads.weights[l].cols() != model.weights[l].cols() ||
        grads.biases[l].size() != model.biases[l].size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
      throw std::runtime_error("adam_step: non-finite gradient at layer " + std::to_string(l));
    }
  }
}

/// Forward pass keeping pre-activations, for backprop.
struct ForwardTrace {
  std::vector<Matrix> pre;   // z_l = a_{l-1} W_l + b_l
  std::vector<Matrix> post;  // a_l = relu(z_l); post[0] is the input batch
};

ForwardTrace run_forward(const Regressor& model, const Matrix& batch) {
  if (batch.cols() != model.input_dims()) {
    throw std::invalid_argument("forward: batch has " + std::to_string(batch.cols()) +
                                " features, model expects " + std::to_string(model.input_dims()));
  }
  ForwardTrace t;
  t.post.push_back(batch);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Matrix z = t.post.back() * model.weights[l];
    z.rowwise() += model.biases[l].transpose();
    t.pre.push_back(z);
    t.post.push_back(z.cwiseMax(0.0));
  }
  return t;
}

}  // namespace

Regressor init(const std::vector<Index>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("init: need at least input and output layers");
  for (Index d : dims) {
    if (d < 1) throw std::invalid_argument("init: layer sizes must be positive");
  }
  Regressor model;
  model.layer_dims = dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const Index fan_in = dims[l];
    const Index fan_out = dims[l + 1];
    const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (Index i = 0; i < fan_in; ++i) {
      for (Index j = 0; j < fan_out; ++j) w(i, j) = rng.uniform(-limit, limit);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(fan_out));
    model.adam_m_w.push_back(Matrix::Zero(fan_in, fan_out));
    model.adam_v_w.push_back(Matrix::Zero(fan_in, fan_out));
    model.adam_m_b.push_back(Vector::Zero(fan_out));
    model.adam_v_b.push_back(Vector::Zero(fan_out));
  }
  return model;
}

Vector forward(const Regressor& model, const Matrix& batch) {
  if (batch.cols() != model.input_dims()) {
    throw std::invalid_argument("forward: batch has " + std::to_string(batch.cols()) +
                                " features, model expects " + std::to_string(model.input_dims()));
  }
  // inference-only path: no activation trace
  Matrix a = batch * model.weights[0];
  a.rowwise() += model.biases[0].transpose();
  a = a.cwiseMax(0.0);
  for (std::size_t l = 1; l < model.weights.size(); ++l) {
    Matrix z = a * model.weights[l];
    z.rowwise() += model.biases[l].transpose();
    a = z.cwiseMax(0.0);
  }
  return a.col(0);
}

Vector predict(const Regressor& model, const Matrix& batch) { return forward(model, batch); }

Scalar mse(const Vector& predictions, const Vector& targets) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("mse: length mismatch");
  }
  if (predictions.size() == 0) throw std::invalid_argument("mse: empty input");
  return (predictions - targets).squaredNorm() / static_cast<Scalar>(predictions.size());
}

Gradients backward(const Regressor& model, const Matrix& batch, const Vector& targets) {
  if (batch.rows() != targets.size()) {
    throw std::invalid_argument("backward: batch rows and target length differ");
  }
  const ForwardTrace t = run_forward(model, batch);
  const Index n = batch.rows();
  const std::size_t layers = model.weights.size();

  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);

  // d mse / d output, then through each ReLU and affine layer
  Matrix delta = (t.post.back().col(0) - targets) * (2.0 / static_cast<Scalar>(n));
  for (std::size_t l = layers; l-- > 0;) {
    delta.array() *= (t.pre[l].array() > 0.0).cast<Scalar>();
    g.weights[l] = t.post[l].transpose() * delta;
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) delta = (delta * model.weights[l].transpose()).eval();
  }
  return g;
}

void adam_step(Regressor& model, const Gradients& grads, const TrainConfig& config) {
  check_shapes(model, grads);
  model.step_count += 1;
  const Scalar t = static_cast<Scalar>(model.step_count);
  const Scalar bc1 = 1.0 - std::pow(config.beta1, t);
  const Scalar bc2 = 1.0 - std::pow(config.beta2, t);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    param.array() -=
        config.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.epsilon);
  };
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    update(model.weights[l], model.adam_m_w[l], model.adam_v_w[l], grads.weights[l]);
    update(model.biases[l], model.adam_m_b[l], model.adam_v_b[l], grads.biases[l]);
  }
}

TrainHistory train(Regressor& model, const Matrix& train_x, const Vector& train_y,
                   const Matrix& test_x, const Vector& test_y, const TrainConfig& config) {
  if (train_x.rows() == 0) throw std::invalid_argument("train: empty training set");
  if (config.batch_size < 1 || config.epochs < 1 || !(config.learning_rate >= 0.0)) {
    throw std::invalid_argument("train: bad config");
  }
  const Index n = train_x.rows();
  Rng rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  TrainHistory history;
  auto record = [&]() {
    history.train_rmse.push_back(std::sqrt(mse(forward(model, train_x), train_y)));
    history.test_rmse.push_back(test_x.rows() > 0 ? std::sqrt(mse(forward(model, test_x), test_y))
                                                  : 0.0);
  };
  record();

  Matrix batch;
  Vector target;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index size = std::min<Index>(config.batch_size, n - start);
      batch.resize(size, train_x.cols());
      target.resize(size);
      for (Index i = 0; i < size; ++i) {
        batch.row(i) = train_x.row(order[static_cast<std::size_t>(start + i)]);
        target(i) = train_y(order[static_cast<std::size_t>(start + i)]);
      }
      adam_step(model, backward(model, batch, target), config);
    }
    record();
    if (!std::isfinite(history.train_rmse.back())) {
      throw std::runtime_error("train: diverged (non-finite RMSE) at epoch " + std::to_string(epoch));
    }
  }
  return history;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<Scalar>();
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const Regressor& model) {
  nlohmann::json j;
  j["layer_dims"] = model.layer_dims;
  j["activation"] = "relu";
  j["step_count"] = model.step_count;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    weights.push_back(matrix_to_json(model.weights[l]));
    biases.push_back(std::vector<Scalar>(model.biases[l].data(),
                                         model.biases[l].data() + model.biases[l].size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

Regressor regressor_from_json(const nlohmann::json& j) {
  Regressor model;
  model.layer_dims = j.at("layer_dims").get<std::vector<Index>>();
  model.step_count = j.at("step_count").get<long>();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    model.weights.push_back(matrix_from_json(weights.at(l)));
    const auto b = biases.at(l).get<std::vector<Scalar>>();
    model.biases.push_back(Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size())));
    model.adam_m_w.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    model.adam_v_w.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    model.adam_m_b.push_back(Vector::Zero(model.biases[l].size()));
    model.adam_v_b.push_back(Vector::Zero(model.biases[l].size()));
  }
  return model;
}

void save(const Regressor& model, const std::string& path, const nlohmann::json& extra) {
  nlohmann::json j = to_json(model);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

Regressor load(const std::string& path, nlohmann::json* extra) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  if (extra) *extra = j;
  return regressor_from_json(j);
}

}  // namespace phm::net
