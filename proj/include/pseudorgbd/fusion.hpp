#pragma once

// Fully connected classifier heads and the fusion MLP: ReLU hidden layers, a
// softmax output, mean softmax cross-entropy, hand-written backprop and seeded
// mini-batch SGD. Batches are column-major: one sample per column.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pseudorgbd/data_io.hpp"
#include "pseudorgbd/error.hpp"

namespace pseudorgbd {

enum class Optimizer { kSgd, kMomentum };

std::string to_string(Optimizer optimizer);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
  int epochs{30};
  int batch_size{32};
  double learning_rate{0.05};
  std::uint64_t seed{1};
  Optimizer optimizer{Optimizer::kMomentum};
  double momentum{0.9};
  std::vector<int> hidden{1024};
  double init_gain{1.0};  // uniform(+-gain * sqrt(6 / fan_in))

  void validate() const;
  nlohmann::json to_json() const;
};

template <typename Scalar>
struct MlpModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<int> layer_dims;  // input, hidden..., classes
  std::vector<Matrix> weights;  // weights[l] is layer_dims[l+1] x layer_dims[l]
  std::vector<Vector> biases;

  std::size_t num_layers() const { return weights.size(); }
  int input_dim() const { return layer_dims.front(); }
  int num_classes() const { return layer_dims.back(); }

  static MlpModel zeros(std::vector<int> dims) {
    check_dims(dims);
    MlpModel m;
    m.layer_dims = std::move(dims);
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
      m.weights.push_back(Matrix::Zero(m.layer_dims[l + 1], m.layer_dims[l]));
      m.biases.push_back(Vector::Zero(m.layer_dims[l + 1]));
    }
    return m;
  }

  /// Weights uniform in +-gain * sqrt(6 / fan_in), biases zero.
  static MlpModel random(std::vector<int> dims, std::uint64_t seed, double gain = 1.0) {
    MlpModel m = zeros(std::move(dims));
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      const double limit = gain * std::sqrt(6.0 / m.layer_dims[l]);
      std::uniform_real_distribution<double> dist(-limit, limit);
      Matrix& w = m.weights[l];
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(dist(rng));
    }
    return m;
  }

  void validate() const {
    check_dims(layer_dims);
    if (weights.size() + 1 != layer_dims.size() || biases.size() != weights.size()) {
      throw ContractError("mlp: parameter count does not match layer_dims");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
          biases[l].size() != layer_dims[l + 1]) {
        throw ContractError("mlp: layer " + std::to_string(l) + " has the wrong shape");
      }
      if (!weights[l].allFinite() || !biases[l].allFinite()) {
        throw ContractError("mlp: layer " + std::to_string(l) + " has non-finite parameters");
      }
    }
  }

  template <typename Other>
  MlpModel<Other> cast() const {
    MlpModel<Other> out;
    out.layer_dims = layer_dims;
    for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
    for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
    return out;
  }

 private:
  static void check_dims(const std::vector<int>& dims) {
    if (dims.size() < 2) throw ContractError("mlp: need at least input and output sizes");
    for (int d : dims) {
      if (d < 1) throw ContractError("mlp: layer sizes must be positive");
    }
  }
};

namespace detail {

template <typename Scalar>
void check_input(const MlpModel<Scalar>& model, Eigen::Index rows) {
  if (model.weights.empty()) throw ContractError("mlp: model has no layers");
  if (rows != model.input_dim()) {
    throw ContractError("mlp: input has dimension " + std::to_string(rows) + ", model expects " +
                        std::to_string(model.input_dim()));
  }
}

// Column-wise softmax with the max subtracted for stability.
template <typename Scalar>
typename MlpModel<Scalar>::Matrix softmax_columns(const typename MlpModel<Scalar>::Matrix& logits) {
  typename MlpModel<Scalar>::Matrix p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

}  // namespace detail

/// Pre-softmax outputs for a batch.
template <typename Scalar>
typename MlpModel<Scalar>::Matrix logits(const MlpModel<Scalar>& model,
                                         const Eigen::Ref<const typename MlpModel<Scalar>::Matrix>& inputs) {
  detail::check_input(model, inputs.rows());
  typename MlpModel<Scalar>::Matrix a = inputs;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    typename MlpModel<Scalar>::Matrix z = model.weights[l] * a;
    z.colwise() += model.biases[l];
    if (l + 1 < model.num_layers()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
  }
  return a;
}

template <typename Scalar>
typename MlpModel<Scalar>::Matrix forward_batch(const MlpModel<Scalar>& model,
                                                const Eigen::Ref<const typename MlpModel<Scalar>::Matrix>& inputs) {
  return detail::softmax_columns<Scalar>(logits(model, inputs));
}

/// Class probabilities for one input vector.
template <typename Scalar>
typename MlpModel<Scalar>::Vector forward(const MlpModel<Scalar>& model,
                                          const Eigen::Ref<const typename MlpModel<Scalar>::Vector>& x) {
  if (!x.allFinite()) throw ContractError("mlp: input contains non-finite values");
  return forward_batch<Scalar>(model, x);
}

/// Lowest index among the maxima.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

struct Prediction {
  std::string sample_id;
  Eigen::VectorXd class_probabilities;
  int argmax_class{0};
};

template <typename Scalar>
Prediction predict(const MlpModel<Scalar>& model, const Eigen::Ref<const typename MlpModel<Scalar>::Vector>& x,
                   std::string sample_id = {}) {
  Prediction p;
  p.sample_id = std::move(sample_id);
  p.class_probabilities = forward(model, x).template cast<double>();
  p.argmax_class = argmax(p.class_probabilities);
  return p;
}

/// Probabilities for every column of `inputs`, paired with `ids`.
template <typename Scalar>
std::vector<Prediction> predict_batch(const MlpModel<Scalar>& model,
                                      const Eigen::Ref<const typename MlpModel<Scalar>::Matrix>& inputs,
                                      const std::vector<std::string>& ids) {
  if (static_cast<Eigen::Index>(ids.size()) != inputs.cols()) throw ContractError("predict_batch: id count mismatch");
  const typename MlpModel<Scalar>::Matrix probs = forward_batch(model, inputs);
  std::vector<Prediction> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[i].sample_id = ids[i];
    out[i].class_probabilities = probs.col(static_cast<Eigen::Index>(i)).template cast<double>();
    out[i].argmax_class = argmax(out[i].class_probabilities);
  }
  return out;
}

/// Equal-weight average of two heads' probability vectors.
std::vector<Prediction> naive_average(const std::vector<Prediction>& a, const std::vector<Prediction>& b);

template <typename Scalar>
struct Gradients {
  std::vector<typename MlpModel<Scalar>::Matrix> weights;
  std::vector<typename MlpModel<Scalar>::Vector> biases;
};

template <typename Scalar>
struct LossAndGrad {
  Scalar loss{0};
  Gradients<Scalar> grad;
};

/// Mean softmax cross-entropy over the batch and its gradient by backprop.
template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const MlpModel<Scalar>& model,
                                  const Eigen::Ref<const typename MlpModel<Scalar>::Matrix>& inputs,
                                  std::span<const int> labels) {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  detail::check_input(model, inputs.rows());
  const Eigen::Index batch = inputs.cols();
  if (batch == 0 || static_cast<Eigen::Index>(labels.size()) != batch) {
    throw ContractError("loss_and_grad: need one label per sample and a non-empty batch");
  }
  for (int y : labels) {
    if (y < 0 || y >= model.num_classes())
      throw ContractError("loss_and_grad: label " + std::to_string(y) + " out of range");
  }

  const std::size_t layers = model.num_layers();
  std::vector<Matrix> acts;  // acts[l] is the input to layer l
  acts.reserve(layers + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = model.weights[l] * acts.back();
    z.colwise() += model.biases[l];
    if (l + 1 < layers) z = z.cwiseMax(Scalar(0));
    acts.push_back(std::move(z));
  }
  const Matrix& out_logits = acts.back();
  const auto col_max = out_logits.colwise().maxCoeff();
  const auto log_sum = ((out_logits.rowwise() - col_max).array().exp().colwise().sum().log() + col_max.array()).eval();

  LossAndGrad<Scalar> result;
  Scalar total = 0;
  for (Eigen::Index j = 0; j < batch; ++j) total += log_sum(j) - out_logits(labels[static_cast<std::size_t>(j)], j);
  result.loss = total / static_cast<Scalar>(batch);
  if (!std::isfinite(result.loss)) {
    throw DivergenceError("loss_and_grad: non-finite loss over a batch of " + std::to_string(batch) +
                          " (max |logit| = " + std::to_string(static_cast<double>(out_logits.cwiseAbs().maxCoeff())) +
                          ")");
  }

  Matrix delta = (out_logits.rowwise() - log_sum.matrix()).array().exp().matrix();
  for (Eigen::Index j = 0; j < batch; ++j) delta(labels[static_cast<std::size_t>(j)], j) -= Scalar(1);
  delta /= static_cast<Scalar>(batch);

  result.grad.weights.resize(layers);
  result.grad.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    result.grad.weights[l].noalias() = delta * acts[l].transpose();
    result.grad.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = model.weights[l].transpose() * delta;
    delta = back.cwiseProduct((acts[l].array() > Scalar(0)).matrix().template cast<Scalar>());
  }
  return result;
}

template <typename Scalar>
Scalar mean_loss(const MlpModel<Scalar>& model, const Eigen::Ref<const typename MlpModel<Scalar>::Matrix>& inputs,
                 std::span<const int> labels) {
  const typename MlpModel<Scalar>::Matrix z = logits(model, inputs);
  Scalar total = 0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const Scalar m = z.col(j).maxCoeff();
    total += std::log((z.col(j).array() - m).exp().sum()) + m - z(labels[static_cast<std::size_t>(j)], j);
  }
  return total / static_cast<Scalar>(z.cols());
}

template <typename Scalar>
struct TrainResult {
  MlpModel<Scalar> model;
  std::vector<double> loss_history;  // full-set loss after each epoch
};

/// Seeded mini-batch SGD from a fan-in uniform initialization. Layer sizes are
/// [input, config.hidden..., num_classes].
template <typename Scalar>
TrainResult<Scalar> train_classifier(const Eigen::Ref<const typename MlpModel<Scalar>::Matrix>& inputs,
                                     std::span<const int> labels, int num_classes, const TrainConfig& config) {
  using Matrix = typename MlpModel<Scalar>::Matrix;
  config.validate();
  if (num_classes < 2) throw ContractError("train: need at least 2 classes");
  const Eigen::Index n = inputs.cols();
  if (n == 0 || static_cast<Eigen::Index>(labels.size()) != n) {
    throw ContractError("train: need one label per sample and at least one sample");
  }
  if (!inputs.allFinite()) throw DataError("train: embeddings contain non-finite values");
  std::vector<char> present(static_cast<std::size_t>(num_classes), 0);
  int distinct = 0;
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ContractError("train: label " + std::to_string(y) + " out of range");
    if (!present[static_cast<std::size_t>(y)]) {
      present[static_cast<std::size_t>(y)] = 1;
      ++distinct;
    }
  }
  if (distinct < 2) throw ContractError("train: labels must cover at least 2 distinct classes");

  std::vector<int> dims{static_cast<int>(inputs.rows())};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(num_classes);

  TrainResult<Scalar> result;
  result.model = MlpModel<Scalar>::random(dims, config.seed, config.init_gain);
  MlpModel<Scalar>& model = result.model;
  Gradients<Scalar> velocity;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    velocity.weights.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    velocity.biases.push_back(
        typename MlpModel<Scalar>::Vector(MlpModel<Scalar>::Vector::Zero(model.biases[l].size())));
  }
  const Scalar lr = static_cast<Scalar>(config.learning_rate);
  const Scalar mu = config.optimizer == Optimizer::kMomentum ? static_cast<Scalar>(config.momentum) : Scalar(0);

  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::vector<int> batch_labels;
  Matrix batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<Eigen::Index> cols(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      batch = inputs(Eigen::all, cols);
      batch_labels.clear();
      for (auto c : cols) batch_labels.push_back(labels[static_cast<std::size_t>(c)]);
      LossAndGrad<Scalar> lg;
      try {
        lg = loss_and_grad<Scalar>(model, batch, batch_labels);
      } catch (const DivergenceError& e) {
        throw DivergenceError("training diverged in epoch " + std::to_string(epoch + 1) + " (" + e.what() +
                              "); try a lower learning rate");
      }
      for (std::size_t l = 0; l < model.num_layers(); ++l) {
        velocity.weights[l] = mu * velocity.weights[l] - lr * lg.grad.weights[l];
        velocity.biases[l] = mu * velocity.biases[l] - lr * lg.grad.biases[l];
        model.weights[l] += velocity.weights[l];
        model.biases[l] += velocity.biases[l];
      }
    }
    const double loss = static_cast<double>(mean_loss<Scalar>(model, inputs, labels));
    if (!std::isfinite(loss)) {
      throw DivergenceError("training diverged after epoch " + std::to_string(epoch + 1) +
                            " (non-finite loss); try a lower learning rate");
    }
    result.loss_history.push_back(loss);
  }
  return result;
}

/// Single-modality head over one embedding set: [dim, hidden..., classes].
template <typename Scalar>
TrainResult<Scalar> train_head(const EmbeddingSet& embeddings, std::span<const int> labels, int num_classes,
                               const TrainConfig& config) {
  const typename MlpModel<Scalar>::Matrix inputs = embeddings.vectors.cast<Scalar>();
  return train_classifier<Scalar>(inputs, labels, num_classes, config);
}

/// Fusion MLP over concatenated RGB+HHA embeddings: [rgb_dim + hha_dim, hidden..., classes].
template <typename Scalar>
TrainResult<Scalar> train_fusion(const JoinedEmbeddings& pairs, std::span<const int> labels, int num_classes,
                                 const TrainConfig& config) {
  const typename MlpModel<Scalar>::Matrix inputs = pairs.vectors.cast<Scalar>();
  return train_classifier<Scalar>(inputs, labels, num_classes, config);
}

/// Looks up each id's label; throws DataError naming the first unlabeled sample.
std::vector<int> labels_for(const std::vector<std::string>& ids, const std::vector<LabeledSample>& labels);

// Serialization: `model.json` header plus one TEN file per weight ([out, in],
// row-major) and bias ([out]). Parameters are stored as float32.
void save_model(const fs::path& dir, const MlpModel<float>& model, const nlohmann::json& header_extra = {});
MlpModel<float> load_model(const fs::path& dir);
nlohmann::json load_model_header(const fs::path& dir);

}  // namespace pseudorgbd
