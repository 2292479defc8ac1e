#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "snnbench/cka.hpp"
#include "snnbench/data.hpp"
#include "snnbench/network.hpp"

namespace snnbench {

// Rate-based stand-in for a trained SNN: same weight matrices (copied), ReLU in
// place of LIF spiking, input = per-channel mean intensity over T. A recurrent
// layer folds v once: r = relu(W x + V relu(W x)). Non-spiking layers are linear.
struct RateModel {
  std::vector<Matrix> w;
  std::vector<std::optional<Matrix>> v;
  std::vector<bool> rectified;
  std::optional<Matrix> score_readout;

  Vector scores(const Vector& mean_input) const;
  // d CE(scores, label) / d mean_input
  Vector input_gradient(const Vector& mean_input, Eigen::Index label) const;
};

RateModel build_ann_counterpart(const Network& net);

Vector mean_intensity(const SpikeTensor& input);

enum class FgsmMode { kAnnCounterpart, kSurrogateDirect };

std::string_view to_string(FgsmMode mode);
FgsmMode fgsm_mode_from_string(std::string_view name);

struct FgsmConfig {
  double epsilon = 0.0;
  FgsmMode mode = FgsmMode::kAnnCounterpart;
  double max_intensity = 1.0;

  void validate() const;
};

inline const std::vector<double> kDefaultEpsilons = {0.001, 0.005, 0.01, 0.02, 0.05};

// Thrown when a weight matrix on the path to the scores is identically zero, so
// the input gradient carries no information.
class MissingGradientPath : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// x + epsilon * sign(grad), the same step at every timestep in counterpart mode and
// the per-step BPTT input gradient sign in surrogate-direct mode. Entries are clipped
// to [0, max(max_intensity, x)] and never move by more than epsilon.
SpikeTensor fgsm_perturb(const Network& net, const SpikeTensor& input, Eigen::Index label, const FgsmConfig& cfg);

// Counterpart mode with a prebuilt model (sweeps reuse one snapshot).
SpikeTensor fgsm_perturb(const RateModel& model, const SpikeTensor& input, Eigen::Index label, double epsilon,
                         double max_intensity = 1.0);

std::vector<SpikeTensor> fgsm_inputs(const Network& net, const Dataset& data, const FgsmConfig& cfg);

double fgsm_accuracy(const Network& net, const Dataset& data, const FgsmConfig& cfg);

struct TriggerSpec {
  std::array<std::size_t, 4> channels{};
  double value = 1.0;

  void validate(std::size_t n_channels) const;
};

// 2x2 block at the top-left of a row-major grid `width` channels wide
// (default floor(sqrt(channels))).
TriggerSpec default_trigger(std::size_t channels, std::optional<std::size_t> width = std::nullopt);

SpikeTensor apply_trigger(const SpikeTensor& sample, const TriggerSpec& trigger);

struct PoisonPlan {
  Eigen::Index source = 0;
  Eigen::Index target = 1;
  double rate = 0.0;
  TriggerSpec trigger;
  std::uint64_t seed = 0;

  void validate(const Dataset& data) const;
};

// floor(rate * |source| + 1e-9): the small slack keeps products such as 0.29 * 100
// from rounding down to 28.
std::size_t poison_count(double rate, std::size_t source_size);

// Dataset indices chosen for poisoning, ascending. Seeded sampling without replacement.
std::vector<std::size_t> poisoned_indices(const Dataset& data, const PoisonPlan& plan);

Dataset poison_dataset(const Dataset& data, const PoisonPlan& plan);

struct AsrResult {
  double asr = 0.0;             // triggered source-class samples predicted as target
  double clean_accuracy = 0.0;  // untriggered test set
  double base_confusion = 0.0;  // untriggered source-class samples predicted as target
  std::size_t source_samples = 0;
};

AsrResult attack_success_rate(const Network& net, const Dataset& test, const PoisonPlan& plan);

// `runs` distinct-pair (source, target) draws, deterministic in seed.
std::vector<std::pair<Eigen::Index, Eigen::Index>> draw_source_targets(Eigen::Index n_classes, std::size_t runs,
                                                                       std::uint64_t seed);

// Per layer (rows) and epsilon (columns): CKA(clean, adversarial) of the recurrent
// net minus the same quantity for the feed-forward net, unbiased estimator over the
// whole dataset as one batch.
Matrix robustness_cka_delta(const Network& net_ff, const Network& net_rec, const Dataset& clean,
                            const std::vector<double>& epsilons, FgsmMode mode = FgsmMode::kAnnCounterpart,
                            RepresentationSource source = RepresentationSource::kSpikes);

// CKA(clean, adversarial) for each layer of one network and each epsilon.
Matrix clean_adversarial_cka(const Network& net, const Dataset& clean, const std::vector<double>& epsilons,
                             FgsmMode mode = FgsmMode::kAnnCounterpart,
                             RepresentationSource source = RepresentationSource::kSpikes);

}  // namespace snnbench
