#pragma once

#include <cstdint>
#include <vector>

#include "cmst/nn.hpp"

namespace cmst {

enum class OptimizerKind { SGD, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-network optimizer state. Adam keeps first/second moment buffers whose
// shapes mirror the network parameters; SGD keeps only the step counter.
class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(OptimizerConfig config, const MlpNetwork& net);

  void step(MlpNetwork& net, const NetGradients& grads);

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_count_; }

  // Moment buffers and counter as a flat block, for checkpoints.
  void append_state(std::vector<double>& out) const;
  std::size_t load_state(std::span<const double> flat);

 private:
  OptimizerConfig config_;
  std::uint64_t step_count_ = 0;
  NetGradients first_moment_;
  NetGradients second_moment_;
};

}  // namespace cmst
