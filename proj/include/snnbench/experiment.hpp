#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snnbench/config.hpp"

namespace snnbench {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double train_accuracy = 0.0;  // running accuracy during the epoch
  double test_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct FgsmPoint {
  double epsilon = 0.0;
  double accuracy = 0.0;

  friend bool operator==(const FgsmPoint&, const FgsmPoint&) = default;
};

struct BackdoorPoint {
  double rate = 0.0;
  std::size_t run = 0;
  Eigen::Index source = 0;
  Eigen::Index target = 1;
  std::size_t poisoned = 0;
  double asr = 0.0;
  double clean_accuracy = 0.0;
  double base_confusion = 0.0;

  friend bool operator==(const BackdoorPoint&, const BackdoorPoint&) = default;
};

struct SeedReport {
  std::uint64_t seed = 0;
  double train_accuracy = 0.0;  // evaluated after training
  double test_accuracy = 0.0;
  std::vector<EpochRecord> curve;
  std::size_t learning_state_peak = 0;
  std::optional<Matrix> cka;                  // [layers x layers], trained net against itself
  std::vector<FisherProfile> fisher;          // t = 1..T
  std::vector<FgsmPoint> fgsm;
  std::vector<BackdoorPoint> backdoor;
  std::string failed_stage;  // empty when every stage completed
  std::string error;
  double wall_seconds = 0.0;  // kept out of the deterministic outputs

  bool ok() const { return failed_stage.empty(); }
  bool has_accuracy() const { return failed_stage != "train" && failed_stage != "evaluate"; }
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SeedReport> seeds;

  // Means over the seeds whose training completed; NaN if none did.
  double mean_train_accuracy() const;
  double mean_test_accuracy() const;
  // Mean FGSM accuracy per configured epsilon.
  std::vector<double> mean_fgsm_accuracy() const;
  bool ok() const;
};

struct RunOptions {
  bool keep_models = false;
  // 0: BENCH_THREADS if set, else hardware concurrency. Results never depend on it.
  std::size_t threads = 0;
};

struct ExperimentRun {
  ExperimentReport report;
  std::vector<Network> models;  // parallel to report.seeds when keep_models
};

// Dataset pair for a config: synthetic tasks are regenerated from task.seed, manifest
// tasks are loaded from disk.
struct TaskData {
  Dataset train;
  Dataset test;
};
TaskData load_task(const TaskSpec& task);

// Trains one network per seed and runs the configured analyses and attacks. Stage
// failures are recorded in the seed's report (stage name and message) rather than
// thrown; what finished before the failure is kept.
ExperimentRun run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Trains one network on `train` with the config's hyperparameters (used for the
// main runs and for each poisoned backdoor run).
struct TrainOutcome {
  Network net;
  std::vector<EpochRecord> curve;
  std::size_t learning_state_peak = 0;
};
TrainOutcome train_network(const ExperimentConfig& config, const Dataset& train, const Dataset* test,
                           std::uint64_t seed);

// Per-sample gradient of the config's learning rule, with the feedback matrices or
// readouts a run with this seed trains under.
GradientFn rule_gradient(const ExperimentConfig& config, const Network& net, Eigen::Index n_classes,
                         std::uint64_t seed);

// Worker count from BENCH_THREADS (>= 1), else hardware concurrency.
std::size_t bench_threads();

}  // namespace snnbench
