#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "snnbench/gradients.hpp"
#include "snnbench/loss.hpp"
#include "snnbench/training.hpp"

namespace snnbench {

// Fixed random map from one layer's spikes to class space. Never trained.
struct LocalReadout {
  Matrix g;  // [n_classes x n_neurons]
};

// q: synaptic-kernel filter of presynaptic spikes; p: membrane-kernel filter of q.
// Under a detached reset p_j = d u_i / d w_ij.
struct PresynapticTrace {
  Vector q;
  Vector p;

  static PresynapticTrace zeros(Eigen::Index n);
};

Vector local_readout(const Vector& spikes, const LocalReadout& readout);

PresynapticTrace trace_update(const PresynapticTrace& trace, const Eigen::Ref<const Vector>& input_spikes,
                              const LifParams& lif);

struct LayerDelta {
  Matrix dw;
  std::optional<Matrix> dv;
};

// Per-step local rule: err = g^T dL(y, onehot)/dy with y = g s,
// delta_ij = -eta * err_i * sigma'(u_i) * p_j. `rec_trace` filters the layer's own
// one-step-delayed spikes and is required iff the layer is recurrent.
LayerDelta decolle_step_update(const LayerParams& layer, const LayerState& state,
                               const PresynapticTrace& input_trace,
                               const std::optional<PresynapticTrace>& rec_trace,
                               const LocalReadout& readout, Eigen::Index target, const LossSpec& loss,
                               const SurrogateSpec& surrogate, double eta);

struct DecolleReadouts {
  std::vector<LocalReadout> layers;
};

// One readout per layer, uniform(-1/sqrt(n_neurons), 1/sqrt(n_neurons)). The last
// layer's readout becomes the network's score readout so inference sums its y^t.
DecolleReadouts make_decolle_readouts(Network& net, Eigen::Index n_classes, std::uint64_t seed);

enum class UpdateCadence { kOnline, kSequence };

std::string_view to_string(UpdateCadence cadence);
UpdateCadence update_cadence_from_string(std::string_view name);

struct DecolleOptions {
  UpdateCadence cadence = UpdateCadence::kOnline;
};

// Sum over t of the local-rule gradients for one sample with weights held fixed.
// Layer l's entry depends only on layers <= l.
GradientResult decolle_gradients(const Network& net, const SpikeTensor& input, Eigen::Index target,
                                 const DecolleReadouts& readouts, const LossSpec& loss = {});

GradientFn decolle_gradient_fn(const DecolleReadouts& readouts, LossSpec loss = {});

// Online cadence: the minibatch is stepped in lockstep and the batch-mean
// per-step gradient is applied after every timestep. Sequence cadence applies one
// update per minibatch.
EpochStats train_epoch_decolle(Network& net, const Dataset& data, const DecolleReadouts& readouts,
                               Optimizer& opt, std::uint64_t shuffle_seed, const LossSpec& loss = {},
                               const DecolleOptions& options = {});

}  // namespace snnbench
