#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "snnbench/network.hpp"

namespace snnbench {

struct LayerGradient {
  Matrix dw;
  std::optional<Matrix> dv;
};

// dL/dw and dL/dv per layer, mirroring the Network's shapes.
struct Gradients {
  std::vector<LayerGradient> layers;

  static Gradients zeros_like(const Network& net);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double factor);
  bool all_finite() const;
  double squared_norm() const;
  // Number of scalar coordinates.
  std::size_t size() const;
  // Coordinates in a fixed order: layer by layer, dw (column-major) then dv.
  Vector flatten() const;
};

// Counts elements of learning state (stored traces, eligibility entries), not bytes.
class MemoryMeter {
 public:
  void acquire(std::size_t n) {
    current_ += n;
    if (current_ > peak_) peak_ = current_;
  }
  void release(std::size_t n) { current_ = n > current_ ? 0 : current_ - n; }
  std::size_t current() const { return current_; }
  std::size_t peak() const { return peak_; }

 private:
  std::size_t current_ = 0;
  std::size_t peak_ = 0;
};

struct GradientResult {
  Gradients grads;
  double loss = 0.0;
  Vector scores;
  std::size_t learning_state_peak = 0;
};

// Per-sample gradient of the training loss for one learning rule.
using GradientFn =
    std::function<GradientResult(const Network&, const SpikeTensor&, Eigen::Index target)>;

}  // namespace snnbench
