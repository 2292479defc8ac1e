#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "snnbench/data.hpp"
#include "snnbench/gradients.hpp"

namespace snnbench {

// One scalar per weight matrix: layer l's w, and v when the layer is recurrent.
struct FisherGroup {
  std::size_t layer = 0;
  std::string kind;  // "w" or "v"
  double value = 0.0;
};

struct FisherProfile {
  std::vector<FisherGroup> groups;
  bool normalized = false;

  double total() const;
};

// How y is chosen in E_y ||grad log f(y|x)||^2.
//   sampled:  one y ~ softmax(scores) per sample (seeded)
//   expected: exact sum over classes weighted by softmax(scores)
//   argmax:   y = predicted class
//   label:    y = dataset label (empirical Fisher)
enum class FisherLabelMode { kSampled, kExpected, kArgmax, kLabel };

std::string_view to_string(FisherLabelMode mode);
FisherLabelMode fisher_label_mode_from_string(std::string_view name);

struct FisherOptions {
  FisherLabelMode label_mode = FisherLabelMode::kSampled;
  bool normalize = false;
  std::uint64_t seed = 0;
  // Per-sample gradient of -log f(y|x) under the chosen learning rule. A softmax
  // cross-entropy GradientFn evaluated at target y is exactly that. Defaults to BPTT.
  GradientFn gradient;
};

// Scales the profile so its groups sum to 1. Throws std::domain_error when the
// profile is identically zero.
FisherProfile normalized(const FisherProfile& profile);

// F_t per group: mean over samples of the squared gradient norm, inputs truncated
// to the first `upto_t` steps (1-based, <= data.t_steps).
FisherProfile fisher_trace(const Network& net, const Dataset& data, std::size_t upto_t,
                           const FisherOptions& options = {});

enum class FisherNormalization { kNone, kFinal, kPerTimestep };

std::string_view to_string(FisherNormalization mode);
FisherNormalization fisher_normalization_from_string(std::string_view name);

// Profiles for t = 1..T. kFinal divides every profile by the total of the t = T
// profile, so the last one sums to 1 and earlier ones show growth; kPerTimestep
// normalizes each profile on its own.
std::vector<FisherProfile> fisher_curve(const Network& net, const Dataset& data, FisherNormalization normalization,
                                        FisherOptions options = {});

}  // namespace snnbench
