#include "snnbench/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace snnbench {

std::string_view to_string(LossKind kind) {
  return kind == LossKind::kSoftmaxCrossEntropy ? "softmax-cross-entropy" : "mean-squared";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "softmax-cross-entropy") return LossKind::kSoftmaxCrossEntropy;
  if (name == "mean-squared") return LossKind::kMeanSquared;
  throw std::invalid_argument("unknown loss kind: " + std::string(name));
}

Vector softmax(const Vector& scores) {
  const double m = scores.maxCoeff();
  Vector e = (scores.array() - m).exp();
  return e / e.sum();
}

double log_softmax_at(const Vector& scores, Eigen::Index k) {
  const double m = scores.maxCoeff();
  return scores[k] - m - std::log((scores.array() - m).exp().sum());
}

LossEval evaluate_loss(const LossSpec& spec, const Vector& scores, Eigen::Index target) {
  if (target < 0 || target >= scores.size())
    throw std::invalid_argument("evaluate_loss: target class out of range");
  LossEval out;
  if (spec.kind == LossKind::kSoftmaxCrossEntropy) {
    out.grad = softmax(scores);
    out.value = -log_softmax_at(scores, target);
    out.grad[target] -= 1.0;
  } else {
    out.grad = scores;
    out.grad[target] -= 1.0;
    out.value = 0.5 * out.grad.squaredNorm();
  }
  return out;
}

}  // namespace snnbench
