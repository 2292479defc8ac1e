#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "snnbench/lif.hpp"
#include "snnbench/spike_tensor.hpp"

namespace snnbench {

enum class ReadoutMode { kMembraneSum, kSpikeCount };

std::string_view to_string(ReadoutMode mode);
ReadoutMode readout_mode_from_string(std::string_view name);

struct Network {
  std::vector<LayerParams> layers;
  ReadoutMode readout = ReadoutMode::kMembraneSum;
  SurrogateSpec surrogate;
  // Optional fixed linear map from the last layer's aggregated activity to class
  // scores. Used by networks whose last trainable layer is a hidden layer with a
  // random local readout.
  std::optional<Matrix> score_readout;

  Eigen::Index n_inputs() const { return layers.front().n_in(); }
  Eigen::Index n_classes() const {
    return score_readout ? score_readout->rows() : layers.back().n_out();
  }
  std::size_t size() const { return layers.size(); }
  void validate() const;
};

struct NetworkConfig {
  Eigen::Index n_inputs = 0;
  std::vector<Eigen::Index> hidden;
  Eigen::Index n_classes = 0;
  bool recurrent = false;         // recurrent weights on hidden layers
  bool class_layer = true;        // false: no [n_classes] output layer; scores via score_readout
  bool output_spiking = false;    // only meaningful with a class layer
  ReadoutMode readout = ReadoutMode::kMembraneSum;
  LifParams lif;
  SurrogateSpec surrogate;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every matrix; deterministic in seed.
// Without a class layer the score readout is drawn from the same stream.
Network init_network(const NetworkConfig& config, std::uint64_t seed);

// Per-step record of one layer. Rows are timesteps.
struct LayerTrace {
  RowMatrix input;      // [T x n_in]
  RowMatrix current;    // [T x n_out]
  RowMatrix potential;  // [T x n_out]
  RowMatrix spikes;     // [T x n_out]

  std::size_t t_steps() const { return static_cast<std::size_t>(potential.rows()); }
  LayerState state_at(std::size_t t) const;
};

struct ForwardResult {
  Vector scores;
  std::vector<LayerTrace> traces;         // filled iff record
  std::vector<LayerState> final_states;   // always filled
};

struct ForwardOptions {
  bool record = false;
  SpikeMode mode = SpikeMode::kHard;
};

ForwardResult forward(const Network& net, const SpikeTensor& input, ForwardOptions options = {});

// Class scores with every spiking layer replaced by logistic((u - v_th) * slope),
// slope taken from the network's surrogate spec.
Vector forward_soft(const Network& net, const SpikeTensor& input);

// Scores from the last layer's aggregated activity (shared by all learning rules).
Vector aggregate_scores(const Network& net, const Vector& activity_sum);

Eigen::Index predict(const Vector& scores);

}  // namespace snnbench
