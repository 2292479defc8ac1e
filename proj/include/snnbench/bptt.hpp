#pragma once

#include <cstdint>
#include <optional>

#include "snnbench/gradients.hpp"
#include "snnbench/loss.hpp"
#include "snnbench/training.hpp"

namespace snnbench {

// Whether the reset term (-v_th * s[t-1]) contributes to gradients. Training always
// detaches it; kFull exists so soft-mode gradients can be checked against finite
// differences of the complete recursion.
enum class ResetGradient { kDetached, kFull };

struct BpttOptions {
  SpikeMode mode = SpikeMode::kHard;
  ResetGradient reset = ResetGradient::kDetached;
  bool input_gradient = false;
};

struct BpttResult : GradientResult {
  std::optional<RowMatrix> input_grad;  // dL/d input[t, c]
};

// Full-unroll backpropagation through time over recorded traces. Hard mode uses the
// network's surrogate for d spike / d u; soft mode uses the exact logistic derivative.
BpttResult bptt_gradients(const Network& net, const SpikeTensor& input, Eigen::Index target,
                          const LossSpec& loss, const BpttOptions& options = {});

GradientFn bptt_gradient_fn(LossSpec loss = {});

EpochStats train_epoch_bptt(Network& net, const Dataset& data, Optimizer& opt,
                            std::uint64_t shuffle_seed, const LossSpec& loss = {});

}  // namespace snnbench
