#pragma once

#include <string_view>

#include "snnbench/spike_tensor.hpp"

namespace snnbench {

enum class LossKind { kSoftmaxCrossEntropy, kMeanSquared };

struct LossSpec {
  LossKind kind = LossKind::kSoftmaxCrossEntropy;
};

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

struct LossEval {
  double value = 0.0;
  Vector grad;  // dL/dscores
};

// Targets are one-hot class indices. Mean-squared uses 0.5 * ||scores - onehot||^2.
LossEval evaluate_loss(const LossSpec& spec, const Vector& scores, Eigen::Index target);

Vector softmax(const Vector& scores);
double log_softmax_at(const Vector& scores, Eigen::Index k);

}  // namespace snnbench
