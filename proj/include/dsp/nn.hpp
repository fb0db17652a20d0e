#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dsp/rng.hpp"

namespace dsp::nn {

enum class HeadMode { single, dueling };

/// Layer sizes of a Q-network. Hidden layers use ReLU, heads are linear.
/// In dueling mode the trunk feeds two heads: a 1-unit value stream and an
/// `actions`-unit advantage stream. Raw outputs are laid out as [V, A_0..A_k].
struct NetShape {
  std::size_t input = 3;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t actions = 7;
  HeadMode head = HeadMode::single;

  std::size_t output_size() const { return head == HeadMode::dueling ? actions + 1 : actions; }
  bool operator==(const NetShape&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Parameters of a network; the same type doubles as a gradient container.
struct MLPParams {
  NetShape shape;
  std::vector<DenseLayer> trunk;
  std::vector<DenseLayer> heads;  // single: {Q}; dueling: {V, A}

  MLPParams zeros_like() const;
  bool all_finite() const;
  std::size_t parameter_count() const;

  /// Flat views over every parameter, trunk first, weights before biases.
  std::vector<double*> parameter_refs();
  std::vector<const double*> parameter_refs() const;
};

using Gradients = MLPParams;

struct TrainStepConfig {
  double learning_rate = 1e-3;
  void validate() const;
};

/// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
MLPParams make_mlp(const NetShape& shape, Rng& rng);

/// Throws if layer dimensions are inconsistent with `net.shape`.
void check_consistent(const MLPParams& net);

/// Raw head outputs for a single input.
Eigen::VectorXd forward(const MLPParams& net, std::span<const double> state);
/// Raw head outputs for a batch; one input per column.
Eigen::MatrixXd forward_batch(const MLPParams& net, const Eigen::MatrixXd& states);

/// Activations kept for backpropagation.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> hidden;  // post-ReLU, one per trunk layer
  Eigen::MatrixXd output;
};

ForwardCache forward_cached(const MLPParams& net, const Eigen::MatrixXd& states);

/// Parameter gradients of sum_j <output_grad[:, j], output[:, j]>.
Gradients backward(const MLPParams& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_grad);
Gradients backward(const MLPParams& net, std::span<const double> state,
                   std::span<const double> output_grad);

/// theta <- theta - lr * grad. Non-finite gradients throw and leave `net` untouched.
void sgd_step(MLPParams& net, const Gradients& grads, const TrainStepConfig& cfg);

inline MLPParams clone_params(const MLPParams& net) { return net; }

inline double value_of(const Eigen::VectorXd& raw) { return raw(0); }
inline Eigen::VectorXd advantages_of(const Eigen::VectorXd& raw) {
  return raw.tail(raw.size() - 1);
}

void to_json(nlohmann::json& j, const MLPParams& net);
void from_json(const nlohmann::json& j, MLPParams& net);

}  // namespace dsp::nn
