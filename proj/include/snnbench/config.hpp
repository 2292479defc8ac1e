#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "snnbench/attacks.hpp"
#include "snnbench/decolle.hpp"
#include "snnbench/eprop.hpp"
#include "snnbench/fisher.hpp"
#include "snnbench/network.hpp"
#include "snnbench/training.hpp"

namespace snnbench {

enum class Method { kBptt, kEprop, kDecolle };
enum class Architecture { kFF, kREC };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);
std::string_view to_string(Architecture arch);  // "ff" / "rec"
Architecture architecture_from_string(std::string_view name);

struct TaskSpec {
  std::string kind = "synthetic";  // "synthetic" or "manifest"
  // synthetic
  Eigen::Index classes = 2;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 50;
  std::size_t t_steps = 20;
  Eigen::Index channels = 64;
  double jitter = 0.2;
  double density = 0.2;
  std::uint64_t seed = 1;  // templates and jitter; the dataset is shared by all run seeds
  // manifest
  std::filesystem::path manifest;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct AnalysisSpec {
  bool cka = false;
  std::size_t cka_batch = 128;
  bool fisher = false;
  FisherLabelMode fisher_label = FisherLabelMode::kSampled;
  FisherNormalization fisher_normalization = FisherNormalization::kFinal;

  friend bool operator==(const AnalysisSpec&, const AnalysisSpec&) = default;
};

struct AttackSpec {
  std::vector<double> fgsm_epsilons;  // empty: no FGSM sweep
  FgsmMode fgsm_mode = FgsmMode::kAnnCounterpart;
  std::vector<double> backdoor_rates;  // empty: no backdoor sweep
  std::size_t backdoor_runs = 5;
  std::uint64_t backdoor_seed = 0;
  std::size_t trigger_width = 0;  // grid width for the 2x2 trigger; 0: floor(sqrt(channels))

  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

struct ExperimentConfig {
  std::string name;
  TaskSpec task;
  Method method = Method::kBptt;
  Architecture architecture = Architecture::kFF;
  std::vector<Eigen::Index> hidden = {120, 84};
  ReadoutMode readout = ReadoutMode::kMembraneSum;
  LifParams lif;
  SurrogateSpec surrogate;
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
  OptimizerSpec optimizer;
  std::size_t epochs = 50;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  FeedbackMode feedback = FeedbackMode::kRandomFixed;
  SignalTiming eprop_timing = SignalTiming::kPerStep;
  UpdateCadence decolle_cadence = UpdateCadence::kOnline;
  AnalysisSpec analysis;
  AttackSpec attacks;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  NetworkConfig network_config(Eigen::Index n_inputs, Eigen::Index n_classes) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// YAML mapping; every key is optional and falls back to the defaults above.
ExperimentConfig config_from_yaml(const std::string& text);
std::string config_to_yaml(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

// Named hyperparameter sets: {nmnist,dvs,timit}-{bptt,eprop,decolle}-{ff,rec} and
// synthetic-{bptt,eprop,decolle}-{ff,rec}. Unknown names throw std::invalid_argument
// listing what exists.
ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace snnbench
