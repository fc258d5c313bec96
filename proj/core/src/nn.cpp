#include "cmst/nn.hpp"

#include <cmath>
#include <string>

#include "cmst/errors.hpp"

namespace cmst {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid:
      return sigmoid(z);
    case Activation::Identity:
      return z;
  }
  return z;
}

// Derivative at the pre-activation; ReLU'(0) is taken as 0.
double activation_grad(Activation a, double z) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Identity:
      return "identity";
  }
  return "?";
}

NetGradients NetGradients::zeros_like(const MlpNetwork& net) {
  NetGradients g;
  g.layers.reserve(net.layer_count());
  for (const DenseLayer& layer : net.layers()) {
    g.layers.push_back({Matrix(layer.out_dim(), layer.in_dim()),
                        std::vector<double>(layer.out_dim(), 0.0)});
  }
  return g;
}

NetGradients& NetGradients::operator+=(const NetGradients& other) {
  if (layers.size() != other.layers.size()) {
    throw ShapeError("NetGradients::operator+=: layer count mismatch");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].d_weights += other.layers[l].d_weights;
    for (std::size_t i = 0; i < layers[l].d_bias.size(); ++i) {
      layers[l].d_bias[i] += other.layers[l].d_bias[i];
    }
  }
  return *this;
}

NetGradients& NetGradients::operator*=(double scalar) {
  for (LayerGrads& lg : layers) {
    lg.d_weights *= scalar;
    for (double& b : lg.d_bias) b *= scalar;
  }
  return *this;
}

MlpNetwork::MlpNetwork(std::vector<DenseLayer> layers)
    : layers_(std::move(layers)) {
  check_chain();
}

MlpNetwork MlpNetwork::make(std::size_t input_dim,
                            std::span<const std::size_t> hidden_dims,
                            std::size_t output_dim,
                            Activation hidden_activation,
                            Activation output_activation) {
  std::vector<DenseLayer> layers;
  std::size_t in = input_dim;
  for (std::size_t h : hidden_dims) {
    layers.push_back(
        {Matrix(h, in), std::vector<double>(h, 0.0), hidden_activation});
    in = h;
  }
  layers.push_back({Matrix(output_dim, in), std::vector<double>(output_dim, 0.0),
                    output_activation});
  return MlpNetwork(std::move(layers));
}

void MlpNetwork::check_chain() const {
  if (layers_.empty()) throw ShapeError("MlpNetwork: no layers");
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    if (layers_[l].out_dim() != layers_[l + 1].in_dim()) {
      throw ShapeError("MlpNetwork: layer " + std::to_string(l) + " out dim " +
                       std::to_string(layers_[l].out_dim()) +
                       " does not feed layer " + std::to_string(l + 1) +
                       " in dim " + std::to_string(layers_[l + 1].in_dim()));
    }
    if (layers_[l].bias.size() != layers_[l].out_dim()) {
      throw ShapeError("MlpNetwork: layer " + std::to_string(l) +
                       " bias size mismatch");
    }
  }
}

std::size_t MlpNetwork::input_dim() const { return layers_.front().in_dim(); }

std::size_t MlpNetwork::output_dim() const { return layers_.back().out_dim(); }

Matrix MlpNetwork::forward(const Matrix& x) {
  Matrix out = forward(x, cache_);
  return out;
}

Matrix MlpNetwork::forward(const Matrix& x, NetTrace& trace) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("MlpNetwork::forward: input cols " +
                     std::to_string(x.cols()) + " != input dim " +
                     std::to_string(input_dim()));
  }
  trace.layers.assign(layers_.size(), {});
  Matrix activ = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    Matrix z = matmul(activ, layer.weights, false, true);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += layer.bias[c];
    }
    trace.layers[l].input = std::move(activ);
    activ = Matrix(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i) {
      activ.data()[i] = apply_activation(layer.activation, z.data()[i]);
    }
    trace.layers[l].pre_activation = std::move(z);
  }
  trace.valid = true;
  return activ;
}

Matrix MlpNetwork::forward_pure(const Matrix& x) const {
  NetTrace scratch;
  return forward(x, scratch);
}

Matrix MlpNetwork::forward_probed(const Matrix& x,
                                  std::vector<double>& kink_args) const {
  NetTrace scratch;
  Matrix out = forward(x, scratch);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].activation != Activation::ReLU) continue;
    const Matrix& z = scratch.layers[l].pre_activation;
    kink_args.insert(kink_args.end(), z.data(), z.data() + z.size());
  }
  return out;
}

BackwardResult MlpNetwork::backward(const Matrix& upstream) {
  BackwardResult result = backward(cache_, upstream);
  cache_.valid = false;
  return result;
}

BackwardResult MlpNetwork::backward(const NetTrace& trace,
                                    const Matrix& upstream) const {
  if (!trace.valid || trace.layers.size() != layers_.size()) {
    throw StateError("MlpNetwork::backward: no forward cache for this batch");
  }
  const Matrix& last_z = trace.layers.back().pre_activation;
  if (upstream.rows() != last_z.rows() || upstream.cols() != last_z.cols()) {
    throw ShapeError("MlpNetwork::backward: upstream shape " +
                     std::to_string(upstream.rows()) + "x" +
                     std::to_string(upstream.cols()) + " != output shape " +
                     std::to_string(last_z.rows()) + "x" +
                     std::to_string(last_z.cols()));
  }

  BackwardResult result;
  result.grads.layers.resize(layers_.size());
  Matrix d_activ = upstream;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& layer = layers_[li];
    const Matrix& z = trace.layers[li].pre_activation;
    const Matrix& x = trace.layers[li].input;

    Matrix dz(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i) {
      dz.data()[i] =
          d_activ.data()[i] * activation_grad(layer.activation, z.data()[i]);
    }

    result.grads.layers[li].d_weights = matmul(dz, x, true, false);
    std::vector<double> db(layer.out_dim(), 0.0);
    for (std::size_t r = 0; r < dz.rows(); ++r) {
      for (std::size_t c = 0; c < dz.cols(); ++c) db[c] += dz(r, c);
    }
    result.grads.layers[li].d_bias = std::move(db);

    d_activ = matmul(dz, layer.weights, false, false);
  }
  result.input_grad = std::move(d_activ);
  return result;
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) {
    n += layer.weights.size() + layer.bias.size();
  }
  return n;
}

double MlpNetwork::get_parameter(std::size_t index) const {
  for (const DenseLayer& layer : layers_) {
    if (index < layer.weights.size()) return layer.weights.data()[index];
    index -= layer.weights.size();
    if (index < layer.bias.size()) return layer.bias[index];
    index -= layer.bias.size();
  }
  throw InputError("MlpNetwork::get_parameter: index out of range");
}

void MlpNetwork::set_parameter(std::size_t index, double value) {
  for (DenseLayer& layer : layers_) {
    if (index < layer.weights.size()) {
      layer.weights.data()[index] = value;
      return;
    }
    index -= layer.weights.size();
    if (index < layer.bias.size()) {
      layer.bias[index] = value;
      return;
    }
    index -= layer.bias.size();
  }
  throw InputError("MlpNetwork::set_parameter: index out of range");
}

void MlpNetwork::append_parameters(std::vector<double>& out) const {
  for (const DenseLayer& layer : layers_) {
    out.insert(out.end(), layer.weights.data(),
               layer.weights.data() + layer.weights.size());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
}

std::size_t MlpNetwork::load_parameters(std::span<const double> flat) {
  std::size_t offset = 0;
  for (DenseLayer& layer : layers_) {
    const std::size_t need = layer.weights.size() + layer.bias.size();
    if (offset + need > flat.size()) {
      throw ParseError("MlpNetwork::load_parameters: parameter block too short");
    }
    std::copy(flat.begin() + offset, flat.begin() + offset + layer.weights.size(),
              layer.weights.data());
    offset += layer.weights.size();
    std::copy(flat.begin() + offset, flat.begin() + offset + layer.bias.size(),
              layer.bias.begin());
    offset += layer.bias.size();
  }
  return offset;
}

std::uint64_t MlpNetwork::parameter_hash(std::uint64_t basis) const {
  std::uint64_t h = basis;
  for (const DenseLayer& layer : layers_) {
    h = fnv1a64(layer.weights.data(), layer.weights.size() * sizeof(double), h);
    h = fnv1a64(layer.bias.data(), layer.bias.size() * sizeof(double), h);
  }
  return h;
}

void init_params(MlpNetwork& net, const Rng& rng) {
  std::size_t index = 0;
  for (DenseLayer& layer : net.layers()) {
    Rng layer_rng = rng.stream("layer" + std::to_string(index++));
    const double stddev = std::sqrt(2.0 / static_cast<double>(layer.in_dim()));
    std::vector<double> w = layer_rng.normal_vector(layer.weights.size(), 0.0, stddev);
    std::copy(w.begin(), w.end(), layer.weights.data());
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

NetGradients finite_diff_grad(const std::function<double()>& loss_fn,
                              MlpNetwork& net, double eps) {
  if (!(eps > 0.0)) throw InputError("finite_diff_grad: eps must be positive");
  NetGradients grads = NetGradients::zeros_like(net);
  const std::size_t n = net.parameter_count();
  std::size_t flat = 0;
  for (std::size_t li = 0; li < grads.layers.size(); ++li) {
    LayerGrads& lg = grads.layers[li];
    const std::size_t wn = lg.d_weights.size();
    const std::size_t bn = lg.d_bias.size();
    for (std::size_t k = 0; k < wn + bn; ++k, ++flat) {
      const double saved = net.get_parameter(flat);
      net.set_parameter(flat, saved + eps);
      const double plus = loss_fn();
      net.set_parameter(flat, saved - eps);
      const double minus = loss_fn();
      net.set_parameter(flat, saved);
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("finite_diff_grad: non-finite loss at parameter " +
                           std::to_string(flat));
      }
      const double g = (plus - minus) / (2.0 * eps);
      if (k < wn) {
        lg.d_weights.data()[k] = g;
      } else {
        lg.d_bias[k - wn] = g;
      }
    }
  }
  (void)n;
  return grads;
}

}  // namespace cmst
