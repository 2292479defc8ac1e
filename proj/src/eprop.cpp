#include "snnbench/eprop.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace snnbench {

EligibilityState EligibilityState::zeros(const LayerParams& layer) {
  const Eigen::Index n_out = layer.n_out(), n_in = layer.n_in();
  EligibilityState s;
  s.filtered_input = Vector::Zero(n_in);
  s.elig_vector = Matrix::Zero(n_out, n_in);
  s.accum_grad = Matrix::Zero(n_out, n_in);
  if (layer.v) {
    s.filtered_rec = Vector::Zero(n_out);
    s.elig_vector_rec = Matrix::Zero(n_out, n_out);
    s.accum_grad_rec = Matrix::Zero(n_out, n_out);
  }
  return s;
}

std::size_t EligibilityState::element_count() const {
  auto n = static_cast<std::size_t>(filtered_input.size() + elig_vector.size() + accum_grad.size());
  if (filtered_rec) n += static_cast<std::size_t>(filtered_rec->size());
  if (elig_vector_rec) n += static_cast<std::size_t>(elig_vector_rec->size());
  if (accum_grad_rec) n += static_cast<std::size_t>(accum_grad_rec->size());
  return n;
}

void eligibility_update(EligibilityState& state, const Eigen::Ref<const Vector>& input_spikes,
                        const Eigen::Ref<const Vector>& own_prev_spikes, const LayerParams& layer) {
  if (input_spikes.size() != layer.n_in() || state.elig_vector.rows() != layer.n_out() ||
      state.elig_vector.cols() != layer.n_in())
    throw std::invalid_argument("eligibility_update: dimension mismatch");
  const LifParams& lif = layer.lif;
  state.filtered_input = lif.alpha_syn * state.filtered_input + input_spikes;
  state.elig_vector *= lif.alpha_mem;
  state.elig_vector.rowwise() += state.filtered_input.transpose();
  if (layer.v) {
    if (own_prev_spikes.size() != layer.n_out() || !state.elig_vector_rec)
      throw std::invalid_argument("eligibility_update: recurrent dimension mismatch");
    *state.filtered_rec = lif.alpha_syn * *state.filtered_rec + own_prev_spikes;
    *state.elig_vector_rec *= lif.alpha_mem;
    state.elig_vector_rec->rowwise() += state.filtered_rec->transpose();
  }
}

namespace {

Vector spike_derivatives(const Vector& potential, const LayerParams& layer,
                         const SurrogateSpec& surrogate, SpikeMode mode) {
  Vector d(potential.size());
  for (Eigen::Index i = 0; i < potential.size(); ++i)
    d[i] = spike_derivative(potential[i], layer.lif.v_th, mode, surrogate);
  return d;
}

}  // namespace

Matrix eligibility_trace(const EligibilityState& state, const Vector& potential,
                         const LayerParams& layer, const SurrogateSpec& surrogate, SpikeMode mode) {
  return spike_derivatives(potential, layer, surrogate, mode).asDiagonal() * state.elig_vector;
}

std::string_view to_string(FeedbackMode mode) {
  return mode == FeedbackMode::kRandomFixed ? "random" : "symmetric";
}

FeedbackMode feedback_mode_from_string(std::string_view name) {
  if (name == "random") return FeedbackMode::kRandomFixed;
  if (name == "symmetric") return FeedbackMode::kSymmetric;
  throw std::invalid_argument("unknown feedback mode: " + std::string(name));
}

std::string_view to_string(SignalTiming timing) {
  return timing == SignalTiming::kPerStep ? "per-step" : "terminal";
}

SignalTiming signal_timing_from_string(std::string_view name) {
  if (name == "per-step") return SignalTiming::kPerStep;
  if (name == "terminal") return SignalTiming::kTerminal;
  throw std::invalid_argument("unknown signal timing: " + std::string(name));
}

FeedbackMatrices symmetric_feedback(const Network& net) {
  FeedbackMatrices fb;
  fb.mode = FeedbackMode::kSymmetric;
  fb.g.resize(net.layers.size());
  // chain maps layer activity to class scores: R * W_{L-1} * ... * W_{l+1}
  Matrix chain = net.score_readout ? *net.score_readout
                                   : Matrix::Identity(net.n_classes(), net.n_classes());
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    fb.g[l] = chain.transpose();
    chain = chain * net.layers[l].w;
  }
  return fb;
}

FeedbackMatrices make_feedback(const Network& net, FeedbackMode mode, std::uint64_t seed) {
  if (mode == FeedbackMode::kSymmetric) return symmetric_feedback(net);
  FeedbackMatrices fb;
  fb.mode = FeedbackMode::kRandomFixed;
  const Eigen::Index k = net.n_classes();
  const double bound = 1.0 / std::sqrt(static_cast<double>(k));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (const auto& layer : net.layers) {
    Matrix g(layer.n_out(), k);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = dist(rng);
    fb.g.push_back(std::move(g));
  }
  return fb;
}

Vector learning_signal(const Vector& output_error, const FeedbackMatrices& fb, std::size_t layer) {
  if (layer >= fb.g.size()) throw std::out_of_range("learning_signal: no feedback matrix for layer");
  if (fb.g[layer].cols() != output_error.size())
    throw std::invalid_argument("learning_signal: error size does not match feedback matrix");
  return fb.g[layer] * output_error;
}

GradientResult eprop_gradients(const Network& net, const SpikeTensor& input, Eigen::Index target,
                               const FeedbackMatrices& fb_in, const LossSpec& loss,
                               const EpropOptions& options) {
  if (static_cast<Eigen::Index>(input.channels()) != net.n_inputs())
    throw std::invalid_argument("eprop_gradients: input channels do not match the first layer");
  const std::size_t L = net.layers.size();
  const LayerParams& out_layer = net.layers.back();
  if (out_layer.v && !net.score_readout)
    throw std::invalid_argument("eprop_gradients: the output layer must not be recurrent");

  const FeedbackMatrices fb = fb_in.mode == FeedbackMode::kSymmetric ? symmetric_feedback(net) : fb_in;
  if (fb.g.size() != L) throw std::invalid_argument("eprop_gradients: feedback matrices do not match network");

  const double slope = net.surrogate.slope;
  std::vector<LayerState> states;
  std::vector<EligibilityState> elig;
  MemoryMeter meter;
  for (const auto& layer : net.layers) {
    states.push_back(LayerState::zeros(layer.n_out()));
    elig.push_back(EligibilityState::zeros(layer));
    meter.acquire(elig.back().element_count());
  }
  // The output layer's error is only known at the end: defer it, accumulating sum_t e^t.
  const bool spike_scores = net.readout == ReadoutMode::kSpikeCount;
  Vector activity = Vector::Zero(out_layer.n_out());

  for (std::size_t t = 0; t < input.t_steps(); ++t) {
    Vector x = input.step(t).transpose();
    for (std::size_t l = 0; l < L; ++l) {
      const LayerParams& layer = net.layers[l];
      eligibility_update(elig[l], x, states[l].spikes, layer);
      states[l] = lif_step(states[l], layer, x, options.mode, slope);
      x = states[l].spikes;
    }
    activity += spike_scores ? states.back().spikes : states.back().potential;

    // Output layer: d score / d u is sigma' for spike counts and 1 for potentials.
    if (spike_scores) {
      const Vector d = spike_derivatives(states.back().potential, out_layer, net.surrogate, options.mode);
      elig.back().accum_grad.noalias() += d.asDiagonal() * elig.back().elig_vector;
      if (out_layer.v) elig.back().accum_grad_rec->noalias() += d.asDiagonal() * *elig.back().elig_vector_rec;
    } else {
      elig.back().accum_grad += elig.back().elig_vector;
    }

    std::optional<Vector> err;
    if (options.timing == SignalTiming::kPerStep && L > 1)
      err = evaluate_loss(loss, aggregate_scores(net, activity), target).grad;
    for (std::size_t l = 0; l + 1 < L; ++l) {
      const LayerParams& layer = net.layers[l];
      Vector row = spike_derivatives(states[l].potential, layer, net.surrogate, options.mode);
      if (err) row = row.cwiseProduct(learning_signal(*err, fb, l));
      elig[l].accum_grad.noalias() += row.asDiagonal() * elig[l].elig_vector;
      if (layer.v) elig[l].accum_grad_rec->noalias() += row.asDiagonal() * *elig[l].elig_vector_rec;
    }
  }

  GradientResult result;
  result.scores = aggregate_scores(net, activity);
  const LossEval le = evaluate_loss(loss, result.scores, target);
  if (!std::isfinite(le.value)) throw TrainingDiverged("eprop_gradients: non-finite loss");
  result.loss = le.value;
  result.grads = Gradients::zeros_like(net);

  const Vector g_act = net.score_readout ? Vector(net.score_readout->transpose() * le.grad) : le.grad;
  result.grads.layers.back().dw = g_act.asDiagonal() * elig.back().accum_grad;
  if (out_layer.v) *result.grads.layers.back().dv = g_act.asDiagonal() * *elig.back().accum_grad_rec;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    LayerGradient& lg = result.grads.layers[l];
    if (options.timing == SignalTiming::kPerStep) {
      lg.dw = elig[l].accum_grad;
      if (lg.dv) *lg.dv = *elig[l].accum_grad_rec;
    } else {
      const Vector signal = learning_signal(le.grad, fb, l);
      lg.dw = signal.asDiagonal() * elig[l].accum_grad;
      if (lg.dv) *lg.dv = signal.asDiagonal() * *elig[l].accum_grad_rec;
    }
  }
  result.learning_state_peak = meter.peak();
  return result;
}

GradientFn eprop_gradient_fn(const FeedbackMatrices& fb, LossSpec loss, EpropOptions options) {
  return [fb, loss, options](const Network& net, const SpikeTensor& x, Eigen::Index target) {
    return eprop_gradients(net, x, target, fb, loss, options);
  };
}

EpochStats train_epoch_eprop(Network& net, const Dataset& data, const FeedbackMatrices& fb,
                             Optimizer& opt, std::uint64_t shuffle_seed, const LossSpec& loss,
                             const EpropOptions& options) {
  return train_epoch(net, data, opt, eprop_gradient_fn(fb, loss, options), shuffle_seed);
}

}  // namespace snnbench
