#include "snnbench/decolle.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace snnbench {

PresynapticTrace PresynapticTrace::zeros(Eigen::Index n) {
  return PresynapticTrace{Vector::Zero(n), Vector::Zero(n)};
}

Vector local_readout(const Vector& spikes, const LocalReadout& readout) {
  if (readout.g.cols() != spikes.size()) throw std::invalid_argument("local_readout: dimension mismatch");
  return readout.g * spikes;
}

PresynapticTrace trace_update(const PresynapticTrace& trace, const Eigen::Ref<const Vector>& input_spikes,
                              const LifParams& lif) {
  if (input_spikes.size() != trace.q.size()) throw std::invalid_argument("trace_update: dimension mismatch");
  PresynapticTrace next;
  next.q = lif.alpha_syn * trace.q + input_spikes;
  next.p = lif.alpha_mem * trace.p + next.q;
  return next;
}

namespace {

// Adds the (positive) local-loss gradient of one step into `dw` / `dv`; returns the local loss.
double add_step_gradient(const LayerParams& layer, const LayerState& state,
                         const PresynapticTrace& input_trace, const PresynapticTrace* rec_trace,
                         const LocalReadout& readout, Eigen::Index target, const LossSpec& loss,
                         const SurrogateSpec& surrogate, double scale, Matrix& dw, Matrix* dv) {
  const LossEval le = evaluate_loss(loss, local_readout(state.spikes, readout), target);
  Vector err = readout.g.transpose() * le.grad;
  for (Eigen::Index i = 0; i < err.size(); ++i)
    err[i] *= scale * surrogate_grad(state.potential[i], surrogate, layer.lif.v_th);
  dw.noalias() += err * input_trace.p.transpose();
  if (dv) dv->noalias() += err * rec_trace->p.transpose();
  return le.value;
}

}  // namespace

LayerDelta decolle_step_update(const LayerParams& layer, const LayerState& state,
                               const PresynapticTrace& input_trace,
                               const std::optional<PresynapticTrace>& rec_trace,
                               const LocalReadout& readout, Eigen::Index target, const LossSpec& loss,
                               const SurrogateSpec& surrogate, double eta) {
  if (input_trace.p.size() != layer.n_in() || state.potential.size() != layer.n_out() ||
      readout.g.cols() != layer.n_out())
    throw std::invalid_argument("decolle_step_update: dimension mismatch");
  if (layer.recurrent() != rec_trace.has_value())
    throw std::invalid_argument("decolle_step_update: recurrent trace required iff the layer is recurrent");
  LayerDelta delta;
  delta.dw = Matrix::Zero(layer.n_out(), layer.n_in());
  if (layer.v) delta.dv = Matrix::Zero(layer.n_out(), layer.n_out());
  add_step_gradient(layer, state, input_trace, rec_trace ? &*rec_trace : nullptr, readout, target, loss,
                    surrogate, -eta, delta.dw, delta.dv ? &*delta.dv : nullptr);
  return delta;
}

DecolleReadouts make_decolle_readouts(Network& net, Eigen::Index n_classes, std::uint64_t seed) {
  if (n_classes <= 0) throw std::invalid_argument("make_decolle_readouts: class count must be positive");
  for (const auto& layer : net.layers)
    if (!layer.spiking) throw std::invalid_argument("make_decolle_readouts: every layer must spike");
  std::mt19937_64 rng(seed);
  DecolleReadouts out;
  for (const auto& layer : net.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.n_out()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    LocalReadout r{Matrix(n_classes, layer.n_out())};
    for (Eigen::Index i = 0; i < r.g.rows(); ++i)
      for (Eigen::Index j = 0; j < r.g.cols(); ++j) r.g(i, j) = dist(rng);
    out.layers.push_back(std::move(r));
  }
  net.readout = ReadoutMode::kSpikeCount;
  net.score_readout = out.layers.back().g;
  net.validate();
  return out;
}

std::string_view to_string(UpdateCadence cadence) {
  return cadence == UpdateCadence::kOnline ? "online" : "sequence";
}

UpdateCadence update_cadence_from_string(std::string_view name) {
  if (name == "online") return UpdateCadence::kOnline;
  if (name == "sequence") return UpdateCadence::kSequence;
  throw std::invalid_argument("unknown update cadence: " + std::string(name));
}

namespace {

struct SampleRun {
  std::vector<LayerState> states;
  std::vector<PresynapticTrace> input_traces;
  std::vector<std::optional<PresynapticTrace>> rec_traces;
  Vector activity;

  SampleRun(const Network& net) {
    for (const auto& layer : net.layers) {
      states.push_back(LayerState::zeros(layer.n_out()));
      input_traces.push_back(PresynapticTrace::zeros(layer.n_in()));
      rec_traces.push_back(layer.v ? std::optional(PresynapticTrace::zeros(layer.n_out())) : std::nullopt);
    }
    activity = Vector::Zero(net.layers.back().n_out());
  }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < input_traces.size(); ++l) {
      n += static_cast<std::size_t>(2 * input_traces[l].q.size());
      if (rec_traces[l]) n += static_cast<std::size_t>(2 * rec_traces[l]->q.size());
    }
    return n;
  }

  // Advances every layer by one step and adds scale * local gradient into `grads`.
  void step(const Network& net, const DecolleReadouts& readouts, const Eigen::Ref<const Vector>& input,
            Eigen::Index target, const LossSpec& loss, double scale, Gradients& grads) {
    Vector x = input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const LayerParams& layer = net.layers[l];
      input_traces[l] = trace_update(input_traces[l], x, layer.lif);
      if (rec_traces[l]) rec_traces[l] = trace_update(*rec_traces[l], states[l].spikes, layer.lif);
      states[l] = lif_step(states[l], layer, x);
      LayerGradient& lg = grads.layers[l];
      add_step_gradient(layer, states[l], input_traces[l], rec_traces[l] ? &*rec_traces[l] : nullptr,
                        readouts.layers[l], target, loss, net.surrogate, scale, lg.dw,
                        lg.dv ? &*lg.dv : nullptr);
      x = states[l].spikes;
    }
    activity += states.back().spikes;
  }
};

void check_readouts(const Network& net, const DecolleReadouts& readouts) {
  if (readouts.layers.size() != net.layers.size())
    throw std::invalid_argument("decolle: one local readout per layer required");
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    if (readouts.layers[l].g.cols() != net.layers[l].n_out())
      throw std::invalid_argument("decolle: readout width does not match layer " + std::to_string(l));
}

}  // namespace

GradientResult decolle_gradients(const Network& net, const SpikeTensor& input, Eigen::Index target,
                                 const DecolleReadouts& readouts, const LossSpec& loss) {
  check_readouts(net, readouts);
  if (static_cast<Eigen::Index>(input.channels()) != net.n_inputs())
    throw std::invalid_argument("decolle_gradients: input channels do not match the first layer");
  GradientResult result;
  result.grads = Gradients::zeros_like(net);
  SampleRun run(net);
  for (std::size_t t = 0; t < input.t_steps(); ++t)
    run.step(net, readouts, input.step(t).transpose(), target, loss, 1.0, result.grads);
  result.scores = aggregate_scores(net, run.activity);
  result.loss = evaluate_loss(loss, result.scores, target).value;
  if (!std::isfinite(result.loss)) throw TrainingDiverged("decolle_gradients: non-finite loss");
  result.learning_state_peak = run.element_count();
  return result;
}

GradientFn decolle_gradient_fn(const DecolleReadouts& readouts, LossSpec loss) {
  return [readouts, loss](const Network& net, const SpikeTensor& x, Eigen::Index target) {
    return decolle_gradients(net, x, target, readouts, loss);
  };
}

EpochStats train_epoch_decolle(Network& net, const Dataset& data, const DecolleReadouts& readouts,
                               Optimizer& opt, std::uint64_t shuffle_seed, const LossSpec& loss,
                               const DecolleOptions& options) {
  check_readouts(net, readouts);
  EpochStats stats;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  auto check = [](const Gradients& g) {
    if (!g.all_finite()) throw TrainingDiverged("decolle: non-finite weight update");
  };

  for (const auto& batch : batches(data, opt.spec().batch_size, shuffle_seed)) {
    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<SampleRun> runs(batch.size(), SampleRun(net));
    Gradients sequence = Gradients::zeros_like(net);
    for (std::size_t t = 0; t < data.t_steps; ++t) {
      Gradients step = Gradients::zeros_like(net);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const Sample& s = data.samples[batch[b]];
        runs[b].step(net, readouts, s.input.step(t).transpose(), s.label, loss, scale, step);
      }
      check(step);
      if (options.cadence == UpdateCadence::kOnline)
        opt.step(net, step);
      else
        sequence += step;
    }
    if (options.cadence == UpdateCadence::kSequence) opt.step(net, sequence);

    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Sample& s = data.samples[batch[b]];
      const Vector scores = aggregate_scores(net, runs[b].activity);
      const double l = evaluate_loss(loss, scores, s.label).value;
      if (!std::isfinite(l)) {
        std::ostringstream msg;
        msg << "decolle training diverged at sample " << batch[b];
        throw TrainingDiverged(msg.str());
      }
      loss_sum += l;
      if (predict(scores) == s.label) ++correct;
    }
  }
  stats.samples = data.size();
  if (stats.samples > 0) {
    stats.mean_loss = loss_sum / static_cast<double>(stats.samples);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(stats.samples);
  }
  return stats;
}

}  // namespace snnbench
