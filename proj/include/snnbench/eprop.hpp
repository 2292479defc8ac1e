#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "snnbench/gradients.hpp"
#include "snnbench/loss.hpp"
#include "snnbench/training.hpp"

namespace snnbench {

// Forward-accumulated per-synapse state of one layer.
struct EligibilityState {
  Vector filtered_input;                  // synaptic-kernel filter of presynaptic spikes [n_in]
  Matrix elig_vector;                     // membrane-filtered, upsilon [n_out x n_in]
  std::optional<Vector> filtered_rec;     // same for the layer's own delayed spikes [n_out]
  std::optional<Matrix> elig_vector_rec;  // [n_out x n_out]
  Matrix accum_grad;                      // sum_t L_i^t e_ij^t, or sum_t e_ij^t when deferred
  std::optional<Matrix> accum_grad_rec;

  static EligibilityState zeros(const LayerParams& layer);
  std::size_t element_count() const;
};

// Advances the eligibility vectors by one step; call before lif_step for the same t.
//   filtered' = alpha_syn * filtered + input
//   upsilon'  = alpha_mem * upsilon + filtered'   (broadcast over postsynaptic rows)
// The recurrent analogue uses `own_prev_spikes` (s[t-1]), never same-step spikes.
void eligibility_update(EligibilityState& state, const Eigen::Ref<const Vector>& input_spikes,
                        const Eigen::Ref<const Vector>& own_prev_spikes, const LayerParams& layer);

// e_ij^t = d s_i / d u_i * upsilon_ij^t, given the layer's post-step potential.
Matrix eligibility_trace(const EligibilityState& state, const Vector& potential,
                         const LayerParams& layer, const SurrogateSpec& surrogate,
                         SpikeMode mode = SpikeMode::kHard);

enum class FeedbackMode { kRandomFixed, kSymmetric };

std::string_view to_string(FeedbackMode mode);
FeedbackMode feedback_mode_from_string(std::string_view name);

// One [n_neurons x n_classes] matrix per layer; entries for the output layer are unused.
struct FeedbackMatrices {
  std::vector<Matrix> g;
  FeedbackMode mode = FeedbackMode::kRandomFixed;
};

// Random-fixed: uniform(-1/sqrt(n_classes), 1/sqrt(n_classes)), drawn once.
// Symmetric: transpose of the product of downstream forward weights (and score readout).
FeedbackMatrices make_feedback(const Network& net, FeedbackMode mode, std::uint64_t seed);
FeedbackMatrices symmetric_feedback(const Network& net);

// L_i = sum_k g_ik * error_k
Vector learning_signal(const Vector& output_error, const FeedbackMatrices& fb, std::size_t layer);

enum class SignalTiming { kPerStep, kTerminal };

std::string_view to_string(SignalTiming timing);
SignalTiming signal_timing_from_string(std::string_view name);

struct EpropOptions {
  SignalTiming timing = SignalTiming::kPerStep;
  SpikeMode mode = SpikeMode::kHard;
};

// Single forward sweep. The output layer receives its exact error; hidden layers
// receive feedback-routed learning signals. Per-step timing evaluates the error of
// the running readout at every step.
GradientResult eprop_gradients(const Network& net, const SpikeTensor& input, Eigen::Index target,
                               const FeedbackMatrices& fb, const LossSpec& loss,
                               const EpropOptions& options = {});

GradientFn eprop_gradient_fn(const FeedbackMatrices& fb, LossSpec loss = {}, EpropOptions options = {});

EpochStats train_epoch_eprop(Network& net, const Dataset& data, const FeedbackMatrices& fb,
                             Optimizer& opt, std::uint64_t shuffle_seed, const LossSpec& loss = {},
                             const EpropOptions& options = {});

}  // namespace snnbench
