#include "snnbench/bptt.hpp"

#include <cmath>

namespace snnbench {

BpttResult bptt_gradients(const Network& net, const SpikeTensor& input, Eigen::Index target,
                          const LossSpec& loss, const BpttOptions& options) {
  ForwardResult fwd = forward(net, input, ForwardOptions{true, options.mode});
  const auto T = static_cast<Eigen::Index>(input.t_steps());

  MemoryMeter meter;
  for (const LayerTrace& tr : fwd.traces)
    meter.acquire(static_cast<std::size_t>(tr.input.size() + tr.current.size() + tr.potential.size() +
                                           tr.spikes.size()));

  const LossEval le = evaluate_loss(loss, fwd.scores, target);
  if (!std::isfinite(le.value)) throw TrainingDiverged("bptt_gradients: non-finite loss");
  const Vector g_act = net.score_readout ? Vector(net.score_readout->transpose() * le.grad) : le.grad;

  BpttResult result;
  result.grads = Gradients::zeros_like(net);
  result.loss = le.value;
  result.scores = fwd.scores;

  RowMatrix ds_from_above;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const LayerParams& layer = net.layers[li];
    const LayerTrace& tr = fwd.traces[li];
    const LifParams& lif = layer.lif;
    const Eigen::Index n = layer.n_out();
    const bool last = li + 1 == net.layers.size();
    const bool reset_path =
        layer.spiking && lif.refractory_subtract && options.reset == ResetGradient::kFull;

    // External gradients: dL/ds[t] from the layer above or the readout, and for a
    // membrane-sum readout dL/du[t] directly.
    Vector du_ext = Vector::Zero(n);
    RowMatrix ds_ext;
    if (last) {
      if (net.readout == ReadoutMode::kMembraneSum) {
        du_ext = g_act;
        ds_ext = RowMatrix::Zero(T, n);
      } else {
        ds_ext = g_act.transpose().replicate(T, 1);
      }
    } else {
      ds_ext = std::move(ds_from_above);
    }

    RowMatrix d_current(T, n);
    meter.acquire(static_cast<std::size_t>(d_current.size()));
    Vector du_next = Vector::Zero(n), di_next = Vector::Zero(n);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      Vector ds = ds_ext.row(t).transpose();
      if (t + 1 < T) {
        if (layer.v) ds.noalias() += layer.v->transpose() * di_next;
        if (reset_path) ds -= lif.v_th * du_next;
      }
      Vector du = du_ext + lif.alpha_mem * du_next;
      if (layer.spiking)
        for (Eigen::Index k = 0; k < n; ++k)
          du[k] += ds[k] * spike_derivative(tr.potential(t, k), lif.v_th, options.mode, net.surrogate);
      Vector di = du + lif.alpha_syn * di_next;
      d_current.row(t) = di.transpose();
      du_next = std::move(du);
      di_next = std::move(di);
    }

    LayerGradient& lg = result.grads.layers[li];
    lg.dw.noalias() = d_current.transpose() * tr.input;
    if (layer.v) {
      RowMatrix prev_spikes = RowMatrix::Zero(T, n);
      if (T > 1) prev_spikes.bottomRows(T - 1) = tr.spikes.topRows(T - 1);
      lg.dv->noalias() = d_current.transpose() * prev_spikes;
    }
    if (li > 0 || options.input_gradient) ds_from_above = d_current * layer.w;
    meter.release(static_cast<std::size_t>(d_current.size()));
  }

  if (options.input_gradient) result.input_grad = std::move(ds_from_above);
  result.learning_state_peak = meter.peak();
  return result;
}

GradientFn bptt_gradient_fn(LossSpec loss) {
  return [loss](const Network& net, const SpikeTensor& x, Eigen::Index target) -> GradientResult {
    return bptt_gradients(net, x, target, loss);
  };
}

EpochStats train_epoch_bptt(Network& net, const Dataset& data, Optimizer& opt,
                            std::uint64_t shuffle_seed, const LossSpec& loss) {
  return train_epoch(net, data, opt, bptt_gradient_fn(loss), shuffle_seed);
}

}  // namespace snnbench
