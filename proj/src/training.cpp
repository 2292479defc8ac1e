#include "snnbench/training.hpp"

#include <cmath>
#include <sstream>

namespace snnbench {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
  }
  return "unknown";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "momentum") return OptimizerKind::kMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

void OptimizerSpec::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("OptimizerSpec: learning rate must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("OptimizerSpec: batch size must be positive");
}

namespace {

template <typename F>
void for_each_param(Network& net, Gradients& a, Gradients& b, const Gradients& g, F&& f) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    f(net.layers[l].w, a.layers[l].dw, b.layers[l].dw, g.layers[l].dw);
    if (net.layers[l].v) f(*net.layers[l].v, *a.layers[l].dv, *b.layers[l].dv, *g.layers[l].dv);
  }
}

}  // namespace

void Optimizer::step(Network& net, const Gradients& grads) {
  if (spec_.learning_rate == 0.0) return;
  if (first_.layers.empty()) {
    first_ = Gradients::zeros_like(net);
    second_ = Gradients::zeros_like(net);
  }
  ++steps_;
  const double lr = spec_.learning_rate;
  switch (spec_.kind) {
    case OptimizerKind::kSgd:
      for_each_param(net, first_, second_, grads,
                     [lr](Matrix& w, Matrix&, Matrix&, const Matrix& g) { w -= lr * g; });
      break;
    case OptimizerKind::kMomentum: {
      const double mu = spec_.momentum;
      for_each_param(net, first_, second_, grads, [lr, mu](Matrix& w, Matrix& vel, Matrix&, const Matrix& g) {
        vel = mu * vel + g;
        w -= lr * vel;
      });
      break;
    }
    case OptimizerKind::kAdam: {
      const double b1 = spec_.beta1, b2 = spec_.beta2, eps = spec_.epsilon;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
      for_each_param(net, first_, second_, grads,
                     [=](Matrix& w, Matrix& m, Matrix& v, const Matrix& g) {
                       m = b1 * m + (1.0 - b1) * g;
                       v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
                       w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
                     });
      break;
    }
  }
}

EpochStats train_epoch(Network& net, const Dataset& data, Optimizer& opt, const GradientFn& gradient,
                       std::uint64_t shuffle_seed) {
  EpochStats stats;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (const auto& batch : batches(data, opt.spec().batch_size, shuffle_seed)) {
    Gradients acc = Gradients::zeros_like(net);
    for (std::size_t idx : batch) {
      const Sample& s = data.samples[idx];
      GradientResult r = gradient(net, s.input, s.label);
      if (!std::isfinite(r.loss) || !r.grads.all_finite()) {
        std::ostringstream msg;
        msg << "training diverged at sample " << idx << " (loss " << r.loss << ")";
        throw TrainingDiverged(msg.str());
      }
      loss_sum += r.loss;
      if (predict(r.scores) == s.label) ++correct;
      acc += r.grads;
    }
    acc *= 1.0 / static_cast<double>(batch.size());
    opt.step(net, acc);
  }
  stats.samples = data.size();
  if (stats.samples > 0) {
    stats.mean_loss = loss_sum / static_cast<double>(stats.samples);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(stats.samples);
  }
  return stats;
}

EvalStats evaluate(const Network& net, const Dataset& data, const LossSpec& loss) {
  EvalStats out;
  if (data.empty()) return out;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (const auto& s : data.samples) {
    const Vector scores = forward(net, s.input).scores;
    if (predict(scores) == s.label) ++correct;
    loss_sum += evaluate_loss(loss, scores, s.label).value;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  out.mean_loss = loss_sum / static_cast<double>(data.size());
  return out;
}

}  // namespace snnbench
