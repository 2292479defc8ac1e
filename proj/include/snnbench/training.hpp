#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "snnbench/data.hpp"
#include "snnbench/gradients.hpp"
#include "snnbench/loss.hpp"

namespace snnbench {

enum class OptimizerKind { kSgd, kMomentum, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 16;

  void validate() const;
  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

// Applies w <- w - update(grad) with per-parameter state (velocity, Adam moments).
class Optimizer {
 public:
  explicit Optimizer(OptimizerSpec spec) : spec_(spec) { spec_.validate(); }

  const OptimizerSpec& spec() const { return spec_; }
  void step(Network& net, const Gradients& grads);

 private:
  OptimizerSpec spec_;
  Gradients first_;
  Gradients second_;
  long long steps_ = 0;
};

struct EpochStats {
  double mean_loss = 0.0;
  double accuracy = 0.0;  // running accuracy of the pre-update forward passes
  std::size_t samples = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One pass over `data` in minibatches: mean per-sample gradient, then one optimizer step.
EpochStats train_epoch(Network& net, const Dataset& data, Optimizer& opt, const GradientFn& gradient,
                       std::uint64_t shuffle_seed);

struct EvalStats {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

EvalStats evaluate(const Network& net, const Dataset& data, const LossSpec& loss = {});

}  // namespace snnbench
