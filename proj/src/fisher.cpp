#include "snnbench/fisher.hpp"

#include <random>
#include <stdexcept>

#include "snnbench/bptt.hpp"

namespace snnbench {

double FisherProfile::total() const {
  double s = 0.0;
  for (const auto& g : groups) s += g.value;
  return s;
}

std::string_view to_string(FisherLabelMode mode) {
  switch (mode) {
    case FisherLabelMode::kSampled: return "sampled";
    case FisherLabelMode::kExpected: return "expected";
    case FisherLabelMode::kArgmax: return "argmax";
    case FisherLabelMode::kLabel: return "label";
  }
  return "sampled";
}

FisherLabelMode fisher_label_mode_from_string(std::string_view name) {
  if (name == "sampled") return FisherLabelMode::kSampled;
  if (name == "expected") return FisherLabelMode::kExpected;
  if (name == "argmax") return FisherLabelMode::kArgmax;
  if (name == "label") return FisherLabelMode::kLabel;
  throw std::invalid_argument("unknown Fisher label mode: " + std::string(name));
}

std::string_view to_string(FisherNormalization mode) {
  switch (mode) {
    case FisherNormalization::kNone: return "none";
    case FisherNormalization::kFinal: return "final";
    case FisherNormalization::kPerTimestep: return "per-timestep";
  }
  return "none";
}

FisherNormalization fisher_normalization_from_string(std::string_view name) {
  if (name == "none") return FisherNormalization::kNone;
  if (name == "final") return FisherNormalization::kFinal;
  if (name == "per-timestep") return FisherNormalization::kPerTimestep;
  throw std::invalid_argument("unknown Fisher normalization: " + std::string(name));
}

FisherProfile normalized(const FisherProfile& profile) {
  const double total = profile.total();
  if (!(total > 0.0)) throw std::domain_error("fisher: cannot normalize an all-zero profile");
  FisherProfile out = profile;
  for (auto& g : out.groups) g.value /= total;
  out.normalized = true;
  return out;
}

namespace {

FisherProfile empty_profile(const Network& net) {
  FisherProfile p;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    p.groups.push_back({l, "w", 0.0});
    if (net.layers[l].v) p.groups.push_back({l, "v", 0.0});
  }
  return p;
}

void add_squared(FisherProfile& p, const Gradients& g, double weight) {
  std::size_t k = 0;
  for (const auto& lg : g.layers) {
    p.groups[k++].value += weight * lg.dw.squaredNorm();
    if (lg.dv) p.groups[k++].value += weight * lg.dv->squaredNorm();
  }
}

// Inverse-CDF draw with a portable uniform (53 random bits).
Eigen::Index sample_class(const Vector& probs, std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  return probs.size() - 1;
}

}  // namespace

FisherProfile fisher_trace(const Network& net, const Dataset& data, std::size_t upto_t,
                           const FisherOptions& options) {
  if (upto_t == 0 || upto_t > data.t_steps)
    throw std::out_of_range("fisher_trace: t must lie in [1, " + std::to_string(data.t_steps) + "]");
  const GradientFn grad = options.gradient ? options.gradient : bptt_gradient_fn();
  FisherProfile profile = empty_profile(net);
  std::mt19937_64 rng(options.seed);
  for (const Sample& s : data.samples) {
    const SpikeTensor x = s.input.head(upto_t);
    if (options.label_mode == FisherLabelMode::kLabel) {
      add_squared(profile, grad(net, x, s.label).grads, 1.0);
      continue;
    }
    const Vector probs = softmax(forward(net, x).scores);
    switch (options.label_mode) {
      case FisherLabelMode::kSampled:
        add_squared(profile, grad(net, x, sample_class(probs, rng)).grads, 1.0);
        break;
      case FisherLabelMode::kArgmax:
        add_squared(profile, grad(net, x, predict(probs)).grads, 1.0);
        break;
      case FisherLabelMode::kExpected:
        for (Eigen::Index y = 0; y < probs.size(); ++y)
          if (probs[y] > 0.0) add_squared(profile, grad(net, x, y).grads, probs[y]);
        break;
      case FisherLabelMode::kLabel:
        break;
    }
  }
  if (!data.samples.empty())
    for (auto& g : profile.groups) g.value /= static_cast<double>(data.samples.size());
  return options.normalize ? normalized(profile) : profile;
}

std::vector<FisherProfile> fisher_curve(const Network& net, const Dataset& data, FisherNormalization normalization,
                                        FisherOptions options) {
  options.normalize = false;
  std::vector<FisherProfile> curve;
  for (std::size_t t = 1; t <= data.t_steps; ++t) curve.push_back(fisher_trace(net, data, t, options));
  if (normalization == FisherNormalization::kPerTimestep) {
    for (auto& p : curve) p = normalized(p);
  } else if (normalization == FisherNormalization::kFinal && !curve.empty()) {
    const double total = curve.back().total();
    if (!(total > 0.0)) throw std::domain_error("fisher: cannot normalize an all-zero profile");
    for (auto& p : curve) {
      for (auto& g : p.groups) g.value /= total;
      p.normalized = true;
    }
  }
  return curve;
}

}  // namespace snnbench
