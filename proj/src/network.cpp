#include "snnbench/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace snnbench {

std::string_view to_string(ReadoutMode mode) {
  return mode == ReadoutMode::kMembraneSum ? "membrane-sum" : "spike-count";
}

ReadoutMode readout_mode_from_string(std::string_view name) {
  if (name == "membrane-sum") return ReadoutMode::kMembraneSum;
  if (name == "spike-count") return ReadoutMode::kSpikeCount;
  throw std::invalid_argument("unknown readout mode: " + std::string(name));
}

void Network::validate() const {
  if (layers.empty()) throw std::invalid_argument("Network: no layers");
  surrogate.validate();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0 && layers[l].n_in() != layers[l - 1].n_out())
      throw std::invalid_argument("Network: layer " + std::to_string(l) +
                                  " input size does not chain with previous layer");
    if (l + 1 < layers.size() && !layers[l].spiking)
      throw std::invalid_argument("Network: only the last layer may be non-spiking");
  }
  if (readout == ReadoutMode::kSpikeCount && !layers.back().spiking)
    throw std::invalid_argument("Network: spike-count readout needs a spiking last layer");
  if (score_readout) {
    if (score_readout->cols() != layers.back().n_out())
      throw std::invalid_argument("Network: score readout does not match last layer size");
    if (!score_readout->allFinite()) throw std::invalid_argument("Network: non-finite score readout");
  }
}

Network init_network(const NetworkConfig& config, std::uint64_t seed) {
  if (config.n_inputs <= 0 || config.n_classes <= 0)
    throw std::invalid_argument("init_network: zero-sized input or class count");
  for (auto h : config.hidden)
    if (h <= 0) throw std::invalid_argument("init_network: zero-sized hidden layer");
  if (!config.class_layer && config.hidden.empty())
    throw std::invalid_argument("init_network: a network without class layer needs a hidden layer");
  config.lif.validate();
  config.surrogate.validate();

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](Eigen::Index rows, Eigen::Index cols, double k) {
    std::uniform_real_distribution<double> dist(-k, k);
    Matrix m(rows, cols);
    // Row-major fill order keeps the draw sequence independent of storage order.
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
  };

  Network net;
  net.readout = config.readout;
  net.surrogate = config.surrogate;
  Eigen::Index fan_in = config.n_inputs;
  for (auto h : config.hidden) {
    LayerParams layer;
    layer.lif = config.lif;
    layer.w = uniform(h, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    if (config.recurrent) layer.v = uniform(h, h, 1.0 / std::sqrt(static_cast<double>(h)));
    net.layers.push_back(std::move(layer));
    fan_in = h;
  }
  if (config.class_layer) {
    LayerParams out;
    out.lif = config.lif;
    out.spiking = config.output_spiking || config.readout == ReadoutMode::kSpikeCount;
    out.w = uniform(config.n_classes, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    net.layers.push_back(std::move(out));
  } else {
    net.readout = ReadoutMode::kSpikeCount;
    net.score_readout = uniform(config.n_classes, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  }
  net.validate();
  return net;
}

LayerState LayerTrace::state_at(std::size_t t) const {
  const auto i = static_cast<Eigen::Index>(t);
  return LayerState{current.row(i).transpose(), potential.row(i).transpose(),
                    spikes.row(i).transpose()};
}

Vector aggregate_scores(const Network& net, const Vector& activity_sum) {
  if (net.score_readout) return *net.score_readout * activity_sum;
  return activity_sum;
}

ForwardResult forward(const Network& net, const SpikeTensor& input, ForwardOptions options) {
  if (static_cast<Eigen::Index>(input.channels()) != net.n_inputs())
    throw std::invalid_argument("forward: input channels do not match the first layer");
  if (!input.data().allFinite()) throw std::invalid_argument("forward: non-finite input");

  const auto T = static_cast<Eigen::Index>(input.t_steps());
  const double slope = net.surrogate.slope;
  ForwardResult result;
  if (options.record) result.traces.reserve(net.layers.size());

  RowMatrix x = input.data();
  for (const LayerParams& layer : net.layers) {
    const Eigen::Index n = layer.n_out();
    const LifParams& lif = layer.lif;
    const bool reset = layer.spiking && lif.refractory_subtract;
    RowMatrix drive = x * layer.w.transpose();

    RowMatrix cur(T, n), pot(T, n), spk(T, n);
    Vector i_prev = Vector::Zero(n), u_prev = Vector::Zero(n), s_prev = Vector::Zero(n);
    for (Eigen::Index t = 0; t < T; ++t) {
      Vector i_t = lif.alpha_syn * i_prev + drive.row(t).transpose();
      if (layer.v) i_t.noalias() += *layer.v * s_prev;
      Vector u_t = lif.alpha_mem * u_prev + i_t;
      if (reset) u_t -= lif.v_th * s_prev;
      Vector s_t = Vector::Zero(n);
      if (layer.spiking)
        for (Eigen::Index k = 0; k < n; ++k) s_t[k] = spike_value(u_t[k], lif.v_th, options.mode, slope);
      cur.row(t) = i_t.transpose();
      pot.row(t) = u_t.transpose();
      spk.row(t) = s_t.transpose();
      i_prev = std::move(i_t);
      u_prev = std::move(u_t);
      s_prev = std::move(s_t);
    }
    result.final_states.push_back(LayerState{i_prev, u_prev, s_prev});
    if (options.record) result.traces.push_back(LayerTrace{x, cur, pot, spk});
    if (&layer == &net.layers.back()) {
      const Vector activity = net.readout == ReadoutMode::kMembraneSum
                                  ? Vector(pot.colwise().sum().transpose())
                                  : Vector(spk.colwise().sum().transpose());
      result.scores = aggregate_scores(net, activity);
    }
    x = std::move(spk);
  }
  return result;
}

Vector forward_soft(const Network& net, const SpikeTensor& input) {
  return forward(net, input, ForwardOptions{false, SpikeMode::kSoft}).scores;
}

Eigen::Index predict(const Vector& scores) {
  Eigen::Index best = 0;
  scores.maxCoeff(&best);
  return best;
}

}  // namespace snnbench
