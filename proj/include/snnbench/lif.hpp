#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "snnbench/spike_tensor.hpp"

namespace snnbench {

// Decay factors are exp(-1/tau); reset subtracts v_th where the previous step fired.
struct LifParams {
  double alpha_syn = 0.9;
  double alpha_mem = 0.5;
  double v_th = 1.0;
  bool refractory_subtract = true;

  void validate() const;
  friend bool operator==(const LifParams&, const LifParams&) = default;
};

enum class SurrogateKind { kFastSigmoid, kRectangular, kSigmoidSoft };

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::kFastSigmoid;
  double slope = 10.0;

  void validate() const;
  friend bool operator==(const SurrogateSpec&, const SurrogateSpec&) = default;
};

std::string_view to_string(SurrogateKind kind);
SurrogateKind surrogate_kind_from_string(std::string_view name);

// sigma'(u): pseudo-derivative of the spike nonlinearity around v_th.
double surrogate_grad(double u, const SurrogateSpec& spec, double v_th);

// How a layer turns potentials into outputs.
//   kHard: Heaviside with strict u > v_th.
//   kSoft: logistic((u - v_th) * slope); differentiable stand-in used as a gradient oracle.
enum class SpikeMode { kHard, kSoft };

double spike_value(double u, double v_th, SpikeMode mode, double slope);

// d spike / d u for the given mode: the surrogate in hard mode, the exact logistic
// derivative in soft mode.
double spike_derivative(double u, double v_th, SpikeMode mode, const SurrogateSpec& surrogate);

struct LayerParams {
  Matrix w;                // [n_out x n_in]
  std::optional<Matrix> v; // [n_out x n_out], present iff recurrent
  LifParams lif;
  bool spiking = true;     // false: pure integrator (no spikes, no reset)

  Eigen::Index n_in() const { return w.cols(); }
  Eigen::Index n_out() const { return w.rows(); }
  bool recurrent() const { return v.has_value(); }
  void validate() const;
};

struct LayerState {
  Vector current;
  Vector potential;
  Vector spikes;

  static LayerState zeros(Eigen::Index n);
};

// One discrete LIF step:
//   current'   = alpha_syn * current + w * input + v * spikes_prev
//   potential' = alpha_mem * potential + current' - v_th * spikes_prev
//   spikes'    = 1[potential' > v_th]
// `prev.spikes` is the layer's own output from the previous step.
LayerState lif_step(const LayerState& prev, const LayerParams& params,
                    const Eigen::Ref<const Vector>& input, SpikeMode mode = SpikeMode::kHard,
                    double soft_slope = 10.0);

}  // namespace snnbench
