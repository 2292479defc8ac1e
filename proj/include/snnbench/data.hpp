#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "snnbench/spike_tensor.hpp"

namespace snnbench {

struct Sample {
  SpikeTensor input;
  Eigen::Index label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  Eigen::Index n_classes = 0;
  Eigen::Index channels = 0;
  std::size_t t_steps = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::vector<std::size_t> indices_of(Eigen::Index label) const;
  // Uniform shapes and labels in range; throws otherwise.
  void validate() const;
};

// ---- IDX (MNIST family) -----------------------------------------------------

struct IdxImages {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Vector> images;  // row-major pixels scaled to [0, 1]
};

// Magic 0x00000803, big-endian dims, unsigned bytes.
IdxImages load_idx_images(const std::filesystem::path& path);
// Magic 0x00000801.
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

// ---- Event streams ----------------------------------------------------------

struct EventRecord {
  std::size_t t = 0;
  std::size_t channel = 0;
  int polarity = 1;  // +1 ON, -1 OFF
  std::uint32_t weight = 1;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EventBinning {
  // Collapse coincident events in one bin to a single spike instead of counting them.
  bool clamp = false;
};

// ON events land in column `channel`, OFF events in column `channels + channel`.
SpikeTensor tensor_from_events(const std::vector<EventRecord>& events, std::size_t t_steps,
                               std::size_t channels, EventBinning binning = {});
// Inverse of tensor_from_events without clamping; entries become event weights.
std::vector<EventRecord> events_from_tensor(const SpikeTensor& tensor, std::size_t channels);

// CSV with header `t,channel,polarity,label` holding one sample, or
// `sample,t,channel,polarity,label` holding several (grouped by sample id in
// order of first appearance). Out-of-range fields are rejected, never clamped.
// `n_classes == 0` infers the class count from the largest label.
Dataset load_events_csv(const std::filesystem::path& path, std::size_t t_steps, std::size_t channels,
                        Eigen::Index n_classes = 0, EventBinning binning = {});

// ---- Encoders and generators ------------------------------------------------

// Independent Bernoulli(intensity * max_rate) spike per pixel and step.
SpikeTensor encode_poisson(const Vector& image, std::size_t t_steps, double max_rate,
                           std::uint64_t seed);

struct SynthSpec {
  Eigen::Index classes = 2;
  std::size_t n_per_class = 100;
  std::size_t t_steps = 20;
  Eigen::Index channels = 64;
  double jitter = 0.05;   // per-entry flip probability
  double density = 0.2;   // template firing probability
  std::uint64_t seed = 1; // template stream
};

// Each class is a fixed random binary [T x channels] template; samples flip each
// entry independently with probability `jitter`. `sample_seed` drives the jitter
// (defaults to the template seed), so train/test splits can share templates.
Dataset synth_pattern_dataset(const SynthSpec& spec,
                              std::optional<std::uint64_t> sample_seed = std::nullopt);
std::vector<SpikeTensor> synth_templates(const SynthSpec& spec);

// Deterministic minibatch plan; the final partial batch is kept.
std::vector<std::vector<std::size_t>> batches(const Dataset& data, std::size_t batch_size,
                                              std::optional<std::uint64_t> shuffle_seed);

// ---- Manifest ---------------------------------------------------------------

struct DatasetManifest {
  std::string name;
  std::string format;  // "events-csv" or "idx"
  std::size_t t_steps = 0;
  std::size_t channels = 0;  // pixels per polarity plane for events, pixels for idx
  std::vector<std::string> class_names;
  std::vector<std::filesystem::path> train;  // events-csv: files; idx: {images, labels}
  std::vector<std::filesystem::path> test;
  double max_rate = 1.0;     // idx poisson encoding
  std::uint64_t encode_seed = 0;
  bool clamp = false;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
Dataset load_manifest_split(const DatasetManifest& manifest, bool train);

}  // namespace snnbench
