#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cmst/matrix.hpp"
#include "cmst/rng.hpp"

namespace cmst {

enum class Activation { ReLU, Sigmoid, Identity };

const char* to_string(Activation a);

struct DenseLayer {
  Matrix weights;             // out x in
  std::vector<double> bias;   // out
  Activation activation = Activation::Identity;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
};

// Cached forward state of one layer: the batch that went in and the
// pre-activation that came out. Needed to run backward.
struct LayerTrace {
  Matrix input;
  Matrix pre_activation;
};

struct NetTrace {
  std::vector<LayerTrace> layers;
  bool valid = false;
};

struct LayerGrads {
  Matrix d_weights;
  std::vector<double> d_bias;
};

class MlpNetwork;

struct NetGradients {
  std::vector<LayerGrads> layers;

  static NetGradients zeros_like(const MlpNetwork& net);
  NetGradients& operator+=(const NetGradients& other);
  NetGradients& operator*=(double scalar);
};

struct BackwardResult {
  NetGradients grads;
  Matrix input_grad;  // batch x in
};

// Sequential stack of dense layers. Holds its own forward cache for the
// plain forward/backward pair; external NetTrace overloads allow several
// concurrent forward passes through shared parameters.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  explicit MlpNetwork(std::vector<DenseLayer> layers);

  static MlpNetwork make(std::size_t input_dim,
                         std::span<const std::size_t> hidden_dims,
                         std::size_t output_dim,
                         Activation hidden_activation = Activation::ReLU,
                         Activation output_activation = Activation::Identity);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t layer_count() const { return layers_.size(); }
  std::span<DenseLayer> layers() { return layers_; }
  std::span<const DenseLayer> layers() const { return layers_; }

  Matrix forward(const Matrix& x);
  Matrix forward(const Matrix& x, NetTrace& trace) const;
  // Forward pass with no cache; for frozen nets and evaluation.
  Matrix forward_pure(const Matrix& x) const;
  // Forward pass that appends every ReLU pre-activation to `kink_args`,
  // letting gradient checks detect parameters adjacent to kinks.
  Matrix forward_probed(const Matrix& x, std::vector<double>& kink_args) const;

  BackwardResult backward(const Matrix& upstream);
  BackwardResult backward(const NetTrace& trace, const Matrix& upstream) const;

  // Flat parameter access in fixed order (per layer: weights row-major,
  // then bias). Used by the finite-difference oracle and serialization.
  std::size_t parameter_count() const;
  double get_parameter(std::size_t index) const;
  void set_parameter(std::size_t index, double value);
  void append_parameters(std::vector<double>& out) const;
  // Returns the number of doubles consumed from `flat`.
  std::size_t load_parameters(std::span<const double> flat);
  std::uint64_t parameter_hash(std::uint64_t basis = 14695981039346656037ull) const;

 private:
  void check_chain() const;

  std::vector<DenseLayer> layers_;
  NetTrace cache_;
};

// He-style initialization: weights ~ N(0, 2/in_dim), zero biases. Each layer
// draws from its own named substream, so identical (seed, label) pairs
// reproduce parameters exactly.
void init_params(MlpNetwork& net, const Rng& rng);

// Central-difference gradient oracle: perturbs every scalar parameter of
// `net` by +/- eps and evaluates `loss_fn`. Independent of backward().
NetGradients finite_diff_grad(const std::function<double()>& loss_fn,
                              MlpNetwork& net, double eps);

}  // namespace cmst
