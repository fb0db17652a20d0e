#include "dsp/nn.hpp"

#include <cmath>
#include <string>

#include "dsp/error.hpp"

namespace dsp::nn {

namespace {

DenseLayer make_layer(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer l;
  l.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  l.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = rng.uniform(-limit, limit);
  return l;
}

DenseLayer zero_layer(const DenseLayer& like) {
  return {Eigen::MatrixXd::Zero(like.weight.rows(), like.weight.cols()),
          Eigen::VectorXd::Zero(like.bias.size())};
}

void check_layer(const DenseLayer& l, std::size_t in, std::size_t out, const std::string& what) {
  if (l.weight.cols() != static_cast<Eigen::Index>(in) ||
      l.weight.rows() != static_cast<Eigen::Index>(out) ||
      l.bias.size() != static_cast<Eigen::Index>(out))
    throw Error("nn: layer '" + what + "' has inconsistent dimensions");
}

Eigen::MatrixXd affine(const DenseLayer& l, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = l.weight * x;
  z.colwise() += l.bias;
  return z;
}

template <typename Fn>
void for_each_layer(MLPParams& net, Fn&& fn) {
  for (auto& l : net.trunk) fn(l);
  for (auto& l : net.heads) fn(l);
}

template <typename Fn>
void for_each_layer(const MLPParams& net, Fn&& fn) {
  for (const auto& l : net.trunk) fn(l);
  for (const auto& l : net.heads) fn(l);
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

DenseLayer layer_from_json(const nlohmann::json& j) {
  DenseLayer l;
  const auto& w = j.at("weight");
  const auto& b = j.at("bias");
  const auto rows = static_cast<Eigen::Index>(w.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(w.at(0).size()) : 0;
  l.weight.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(w.at(r).size()) != cols) throw Error("nn: ragged weight matrix");
    for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = w.at(r).at(c).get<double>();
  }
  l.bias.resize(static_cast<Eigen::Index>(b.size()));
  for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = b.at(r).get<double>();
  return l;
}

}  // namespace

MLPParams MLPParams::zeros_like() const {
  MLPParams z;
  z.shape = shape;
  for (const auto& l : trunk) z.trunk.push_back(zero_layer(l));
  for (const auto& l : heads) z.heads.push_back(zero_layer(l));
  return z;
}

bool MLPParams::all_finite() const {
  bool ok = true;
  for_each_layer(*this, [&](const DenseLayer& l) {
    ok = ok && l.weight.allFinite() && l.bias.allFinite();
  });
  return ok;
}

std::size_t MLPParams::parameter_count() const {
  std::size_t n = 0;
  for_each_layer(*this, [&](const DenseLayer& l) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  });
  return n;
}

std::vector<double*> MLPParams::parameter_refs() {
  std::vector<double*> refs;
  for_each_layer(*this, [&](DenseLayer& l) {
    for (Eigen::Index k = 0; k < l.weight.size(); ++k) refs.push_back(l.weight.data() + k);
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) refs.push_back(l.bias.data() + k);
  });
  return refs;
}

std::vector<const double*> MLPParams::parameter_refs() const {
  std::vector<const double*> refs;
  for_each_layer(*this, [&](const DenseLayer& l) {
    for (Eigen::Index k = 0; k < l.weight.size(); ++k) refs.push_back(l.weight.data() + k);
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) refs.push_back(l.bias.data() + k);
  });
  return refs;
}

void TrainStepConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw Error("TrainStepConfig: learning_rate must be finite and non-negative");
}

MLPParams make_mlp(const NetShape& shape, Rng& rng) {
  if (shape.input == 0 || shape.actions == 0) throw Error("nn: input and action counts must be > 0");
  MLPParams net;
  net.shape = shape;
  std::size_t in = shape.input;
  for (auto width : shape.hidden) {
    if (width == 0) throw Error("nn: hidden layer width must be > 0");
    net.trunk.push_back(make_layer(in, width, rng));
    in = width;
  }
  if (shape.head == HeadMode::dueling) {
    net.heads.push_back(make_layer(in, 1, rng));
    net.heads.push_back(make_layer(in, shape.actions, rng));
  } else {
    net.heads.push_back(make_layer(in, shape.actions, rng));
  }
  return net;
}

void check_consistent(const MLPParams& net) {
  std::size_t in = net.shape.input;
  if (net.trunk.size() != net.shape.hidden.size()) throw Error("nn: trunk depth mismatch");
  for (std::size_t k = 0; k < net.trunk.size(); ++k) {
    check_layer(net.trunk[k], in, net.shape.hidden[k], "trunk " + std::to_string(k));
    in = net.shape.hidden[k];
  }
  if (net.shape.head == HeadMode::dueling) {
    if (net.heads.size() != 2) throw Error("nn: dueling net needs value and advantage heads");
    check_layer(net.heads[0], in, 1, "value");
    check_layer(net.heads[1], in, net.shape.actions, "advantage");
  } else {
    if (net.heads.size() != 1) throw Error("nn: single-stream net needs exactly one head");
    check_layer(net.heads[0], in, net.shape.actions, "q");
  }
}

ForwardCache forward_cached(const MLPParams& net, const Eigen::MatrixXd& states) {
  if (states.rows() != static_cast<Eigen::Index>(net.shape.input))
    throw Error("nn::forward: input dimension " + std::to_string(states.rows()) +
                " does not match network input " + std::to_string(net.shape.input));
  ForwardCache cache;
  cache.input = states;
  const Eigen::MatrixXd* x = &cache.input;
  for (const auto& layer : net.trunk) {
    cache.hidden.push_back(affine(layer, *x).cwiseMax(0.0));
    x = &cache.hidden.back();
  }
  if (net.shape.head == HeadMode::dueling) {
    cache.output.resize(static_cast<Eigen::Index>(net.shape.output_size()), states.cols());
    cache.output.topRows(1) = affine(net.heads[0], *x);
    cache.output.bottomRows(net.heads[1].weight.rows()) = affine(net.heads[1], *x);
  } else {
    cache.output = affine(net.heads[0], *x);
  }
  return cache;
}

Eigen::MatrixXd forward_batch(const MLPParams& net, const Eigen::MatrixXd& states) {
  return forward_cached(net, states).output;
}

Eigen::VectorXd forward(const MLPParams& net, std::span<const double> state) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(state.size()), 1);
  for (std::size_t k = 0; k < state.size(); ++k) x(static_cast<Eigen::Index>(k), 0) = state[k];
  return forward_batch(net, x).col(0);
}

Gradients backward(const MLPParams& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_grad) {
  if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols())
    throw Error("nn::backward: loss gradient shape does not match network output");
  Gradients g = net.zeros_like();
  const Eigen::MatrixXd& last = cache.hidden.empty() ? cache.input : cache.hidden.back();

  // Gradient flowing into the last trunk activation.
  Eigen::MatrixXd delta;
  if (net.shape.head == HeadMode::dueling) {
    const Eigen::MatrixXd gv = output_grad.topRows(1);
    const Eigen::MatrixXd ga = output_grad.bottomRows(output_grad.rows() - 1);
    g.heads[0].weight = gv * last.transpose();
    g.heads[0].bias = gv.rowwise().sum();
    g.heads[1].weight = ga * last.transpose();
    g.heads[1].bias = ga.rowwise().sum();
    delta = net.heads[0].weight.transpose() * gv + net.heads[1].weight.transpose() * ga;
  } else {
    g.heads[0].weight = output_grad * last.transpose();
    g.heads[0].bias = output_grad.rowwise().sum();
    delta = net.heads[0].weight.transpose() * output_grad;
  }

  for (std::size_t k = net.trunk.size(); k-- > 0;) {
    const Eigen::MatrixXd& act = cache.hidden[k];
    delta = delta.cwiseProduct((act.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd& below = k == 0 ? cache.input : cache.hidden[k - 1];
    g.trunk[k].weight = delta * below.transpose();
    g.trunk[k].bias = delta.rowwise().sum();
    if (k > 0) delta = net.trunk[k].weight.transpose() * delta;
  }
  return g;
}

Gradients backward(const MLPParams& net, std::span<const double> state,
                   std::span<const double> output_grad) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(state.size()), 1);
  for (std::size_t k = 0; k < state.size(); ++k) x(static_cast<Eigen::Index>(k), 0) = state[k];
  auto cache = forward_cached(net, x);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(output_grad.size()), 1);
  for (std::size_t k = 0; k < output_grad.size(); ++k)
    g(static_cast<Eigen::Index>(k), 0) = output_grad[k];
  return backward(net, cache, g);
}

void sgd_step(MLPParams& net, const Gradients& grads, const TrainStepConfig& cfg) {
  cfg.validate();
  if (!(grads.shape == net.shape) || grads.trunk.size() != net.trunk.size() ||
      grads.heads.size() != net.heads.size())
    throw Error("nn::sgd_step: gradient shape does not match parameters");
  if (!grads.all_finite()) throw Error("nn::sgd_step: non-finite gradient, update skipped");
  auto step = [&](DenseLayer& p, const DenseLayer& g) {
    if (p.weight.rows() != g.weight.rows() || p.weight.cols() != g.weight.cols() ||
        p.bias.size() != g.bias.size())
      throw Error("nn::sgd_step: gradient shape does not match parameters");
    p.weight -= cfg.learning_rate * g.weight;
    p.bias -= cfg.learning_rate * g.bias;
  };
  for (std::size_t k = 0; k < net.trunk.size(); ++k) step(net.trunk[k], grads.trunk[k]);
  for (std::size_t k = 0; k < net.heads.size(); ++k) step(net.heads[k], grads.heads[k]);
}

void to_json(nlohmann::json& j, const MLPParams& net) {
  j = nlohmann::json::object();
  j["shape"] = {{"input", net.shape.input},
                {"hidden", net.shape.hidden},
                {"actions", net.shape.actions},
                {"head", net.shape.head == HeadMode::dueling ? "dueling" : "single"}};
  auto layers = [](const std::vector<DenseLayer>& ls) {
    auto arr = nlohmann::json::array();
    for (const auto& l : ls)
      arr.push_back({{"weight", matrix_to_json(l.weight)},
                     {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
    return arr;
  };
  j["trunk"] = layers(net.trunk);
  j["heads"] = layers(net.heads);
}

void from_json(const nlohmann::json& j, MLPParams& net) {
  try {
    const auto& s = j.at("shape");
    net.shape.input = s.at("input").get<std::size_t>();
    net.shape.hidden = s.at("hidden").get<std::vector<std::size_t>>();
    net.shape.actions = s.at("actions").get<std::size_t>();
    const auto head = s.at("head").get<std::string>();
    if (head != "single" && head != "dueling") throw Error("nn: unknown head mode '" + head + "'");
    net.shape.head = head == "dueling" ? HeadMode::dueling : HeadMode::single;
    net.trunk.clear();
    net.heads.clear();
    for (const auto& l : j.at("trunk")) net.trunk.push_back(layer_from_json(l));
    for (const auto& l : j.at("heads")) net.heads.push_back(layer_from_json(l));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("nn: malformed parameter snapshot: ") + e.what());
  }
  check_consistent(net);
}

}  // namespace dsp::nn
