#include "cmst/optimizer.hpp"

#include <cmath>

#include "cmst/errors.hpp"

namespace cmst {

namespace {

void check_grads_shape(const MlpNetwork& net, const NetGradients& grads) {
  if (grads.layers.size() != net.layer_count()) {
    throw ShapeError("optimizer step: gradient layer count mismatch");
  }
  auto layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerGrads& lg = grads.layers[l];
    if (lg.d_weights.rows() != layers[l].out_dim() ||
        lg.d_weights.cols() != layers[l].in_dim() ||
        lg.d_bias.size() != layers[l].out_dim()) {
      throw ShapeError("optimizer step: gradient shape mismatch at layer " +
                       std::to_string(l));
    }
  }
}

}  // namespace

OptimizerState::OptimizerState(OptimizerConfig config, const MlpNetwork& net)
    : config_(config) {
  if (!(config_.learning_rate >= 0.0)) {
    throw ConfigError("optimizer: learning rate must be non-negative");
  }
  if (config_.kind == OptimizerKind::Adam) {
    first_moment_ = NetGradients::zeros_like(net);
    second_moment_ = NetGradients::zeros_like(net);
  }
}

void OptimizerState::step(MlpNetwork& net, const NetGradients& grads) {
  check_grads_shape(net, grads);
  ++step_count_;
  const double lr = config_.learning_rate;
  auto layers = net.layers();

  if (config_.kind == OptimizerKind::SGD) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      DenseLayer& layer = layers[l];
      const LayerGrads& lg = grads.layers[l];
      for (std::size_t i = 0; i < layer.weights.size(); ++i) {
        layer.weights.data()[i] -= lr * lg.d_weights.data()[i];
      }
      for (std::size_t i = 0; i < layer.bias.size(); ++i) {
        layer.bias[i] -= lr * lg.d_bias[i];
      }
    }
    return;
  }

  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double eps = config_.epsilon;
  const double t = static_cast<double>(step_count_);
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);

  auto adam_update = [&](double& param, double g, double& m, double& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    param -= lr * m_hat / (std::sqrt(v_hat) + eps);
  };

  for (std::size_t l = 0; l < layers.size(); ++l) {
    DenseLayer& layer = layers[l];
    const LayerGrads& lg = grads.layers[l];
    LayerGrads& m = first_moment_.layers[l];
    LayerGrads& v = second_moment_.layers[l];
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
      adam_update(layer.weights.data()[i], lg.d_weights.data()[i],
                  m.d_weights.data()[i], v.d_weights.data()[i]);
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      adam_update(layer.bias[i], lg.d_bias[i], m.d_bias[i], v.d_bias[i]);
    }
  }
}

void OptimizerState::append_state(std::vector<double>& out) const {
  out.push_back(static_cast<double>(step_count_));
  for (const NetGradients* moments : {&first_moment_, &second_moment_}) {
    for (const LayerGrads& lg : moments->layers) {
      out.insert(out.end(), lg.d_weights.data(),
                 lg.d_weights.data() + lg.d_weights.size());
      out.insert(out.end(), lg.d_bias.begin(), lg.d_bias.end());
    }
  }
}

std::size_t OptimizerState::load_state(std::span<const double> flat) {
  if (flat.empty()) throw ParseError("optimizer state block empty");
  step_count_ = static_cast<std::uint64_t>(flat[0]);
  std::size_t offset = 1;
  for (NetGradients* moments : {&first_moment_, &second_moment_}) {
    for (LayerGrads& lg : moments->layers) {
      const std::size_t need = lg.d_weights.size() + lg.d_bias.size();
      if (offset + need > flat.size()) {
        throw ParseError("optimizer state block too short");
      }
      std::copy(flat.begin() + offset,
                flat.begin() + offset + lg.d_weights.size(),
                lg.d_weights.data());
      offset += lg.d_weights.size();
      std::copy(flat.begin() + offset, flat.begin() + offset + lg.d_bias.size(),
                lg.d_bias.begin());
      offset += lg.d_bias.size();
    }
  }
  return offset;
}

}  // namespace cmst
