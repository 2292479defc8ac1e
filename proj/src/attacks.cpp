#include "snnbench/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "snnbench/bptt.hpp"
#include "snnbench/loss.hpp"

namespace snnbench {

namespace {

Vector relu(const Vector& z) { return z.cwiseMax(0.0); }

Vector relu_mask(const Vector& z) { return (z.array() > 0.0).cast<double>().matrix(); }

}  // namespace

Vector RateModel::scores(const Vector& mean_input) const {
  Vector a = mean_input;
  for (std::size_t l = 0; l < w.size(); ++l) {
    const Vector z0 = w[l] * a;
    if (!rectified[l]) {
      a = z0;
      continue;
    }
    a = relu(z0);
    if (v[l]) a = relu(z0 + *v[l] * a);
  }
  return score_readout ? Vector(*score_readout * a) : a;
}

Vector RateModel::input_gradient(const Vector& mean_input, Eigen::Index label) const {
  const std::size_t L = w.size();
  std::vector<Vector> inputs(L), z0(L), z(L);
  Vector a = mean_input;
  for (std::size_t l = 0; l < L; ++l) {
    inputs[l] = a;
    z0[l] = w[l] * a;
    if (!rectified[l]) {
      a = z0[l];
      continue;
    }
    a = relu(z0[l]);
    if (v[l]) {
      z[l] = z0[l] + *v[l] * a;
      a = relu(z[l]);
    }
  }
  const Vector s = score_readout ? Vector(*score_readout * a) : a;
  Vector g = evaluate_loss({}, s, label).grad;
  if (score_readout) g = score_readout->transpose() * g;
  for (std::size_t l = L; l-- > 0;) {
    Vector gz0;
    if (!rectified[l]) {
      gz0 = g;
    } else if (v[l]) {
      const Vector gz = g.cwiseProduct(relu_mask(z[l]));
      gz0 = gz + (v[l]->transpose() * gz).cwiseProduct(relu_mask(z0[l]));
    } else {
      gz0 = g.cwiseProduct(relu_mask(z0[l]));
    }
    g = w[l].transpose() * gz0;
  }
  return g;
}

RateModel build_ann_counterpart(const Network& net) {
  net.validate();
  RateModel m;
  for (const auto& layer : net.layers) {
    m.w.push_back(layer.w);
    m.v.push_back(layer.v);
    m.rectified.push_back(layer.spiking);
  }
  m.score_readout = net.score_readout;
  return m;
}

Vector mean_intensity(const SpikeTensor& input) {
  return input.data().colwise().mean().transpose();
}

std::string_view to_string(FgsmMode mode) {
  return mode == FgsmMode::kAnnCounterpart ? "ann-counterpart" : "surrogate-direct";
}

FgsmMode fgsm_mode_from_string(std::string_view name) {
  if (name == "ann-counterpart") return FgsmMode::kAnnCounterpart;
  if (name == "surrogate-direct") return FgsmMode::kSurrogateDirect;
  throw std::invalid_argument("unknown FGSM mode: " + std::string(name));
}

void FgsmConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("fgsm: epsilon must be >= 0");
  if (!(max_intensity > 0.0)) throw std::invalid_argument("fgsm: max intensity must be positive");
}

namespace {

void check_gradient_path(const std::vector<Matrix>& weights) {
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (weights[l].isZero(0.0))
      throw MissingGradientPath("fgsm: layer " + std::to_string(l) + " has all-zero weights; no gradient path to the input");
}

double sign(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

double step_entry(double x, double direction, double epsilon, double max_intensity) {
  const double hi = std::max(max_intensity, x);
  double y = std::clamp(x + epsilon * direction, 0.0, hi);
  while (std::abs(y - x) > epsilon) y = std::nextafter(y, x);
  return y;
}

}  // namespace

SpikeTensor fgsm_perturb(const RateModel& model, const SpikeTensor& input, Eigen::Index label, double epsilon,
                         double max_intensity) {
  FgsmConfig{epsilon, FgsmMode::kAnnCounterpart, max_intensity}.validate();
  if (epsilon == 0.0) return input;
  check_gradient_path(model.w);
  const Vector g = model.input_gradient(mean_intensity(input), label);
  SpikeTensor out = input;
  for (std::size_t t = 0; t < out.t_steps(); ++t)
    for (std::size_t c = 0; c < out.channels(); ++c)
      out(t, c) = step_entry(input(t, c), sign(g[static_cast<Eigen::Index>(c)]), epsilon, max_intensity);
  return out;
}

SpikeTensor fgsm_perturb(const Network& net, const SpikeTensor& input, Eigen::Index label, const FgsmConfig& cfg) {
  cfg.validate();
  if (cfg.epsilon == 0.0) return input;
  if (cfg.mode == FgsmMode::kAnnCounterpart)
    return fgsm_perturb(build_ann_counterpart(net), input, label, cfg.epsilon, cfg.max_intensity);

  std::vector<Matrix> weights;
  for (const auto& layer : net.layers) weights.push_back(layer.w);
  check_gradient_path(weights);
  BpttOptions opt;
  opt.input_gradient = true;
  const BpttResult r = bptt_gradients(net, input, label, {}, opt);
  SpikeTensor out = input;
  for (std::size_t t = 0; t < out.t_steps(); ++t)
    for (std::size_t c = 0; c < out.channels(); ++c)
      out(t, c) = step_entry(input(t, c), sign((*r.input_grad)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c))),
                             cfg.epsilon, cfg.max_intensity);
  return out;
}

std::vector<SpikeTensor> fgsm_inputs(const Network& net, const Dataset& data, const FgsmConfig& cfg) {
  cfg.validate();
  std::vector<SpikeTensor> out;
  out.reserve(data.size());
  if (cfg.epsilon == 0.0) {
    for (const auto& s : data.samples) out.push_back(s.input);
    return out;
  }
  if (cfg.mode == FgsmMode::kAnnCounterpart) {
    const RateModel model = build_ann_counterpart(net);
    for (const auto& s : data.samples)
      out.push_back(fgsm_perturb(model, s.input, s.label, cfg.epsilon, cfg.max_intensity));
  } else {
    for (const auto& s : data.samples) out.push_back(fgsm_perturb(net, s.input, s.label, cfg));
  }
  return out;
}

double fgsm_accuracy(const Network& net, const Dataset& data, const FgsmConfig& cfg) {
  if (data.size() == 0) return 0.0;
  const auto inputs = fgsm_inputs(net, data, cfg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (predict(forward(net, inputs[i]).scores) == data.samples[i].label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void TriggerSpec::validate(std::size_t n_channels) const {
  for (std::size_t c : channels)
    if (c >= n_channels) throw std::out_of_range("trigger: channel " + std::to_string(c) + " out of range");
  for (std::size_t i = 0; i < channels.size(); ++i)
    for (std::size_t j = i + 1; j < channels.size(); ++j)
      if (channels[i] == channels[j]) throw std::invalid_argument("trigger: locations must be distinct");
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("trigger: value must be >= 0");
}

TriggerSpec default_trigger(std::size_t channels, std::optional<std::size_t> width) {
  const std::size_t w = width.value_or(static_cast<std::size_t>(std::sqrt(static_cast<double>(channels))));
  if (w < 2 || channels < w + 2) throw std::invalid_argument("default_trigger: grid too small for a 2x2 block");
  TriggerSpec t;
  t.channels = {0, 1, w, w + 1};
  t.validate(channels);
  return t;
}

SpikeTensor apply_trigger(const SpikeTensor& sample, const TriggerSpec& trigger) {
  trigger.validate(sample.channels());
  SpikeTensor out = sample;
  for (std::size_t t = 0; t < out.t_steps(); ++t)
    for (std::size_t c : trigger.channels) out(t, c) = trigger.value;
  return out;
}

void PoisonPlan::validate(const Dataset& data) const {
  if (source == target) throw std::invalid_argument("poison plan: source and target must differ");
  if (source < 0 || source >= data.n_classes || target < 0 || target >= data.n_classes)
    throw std::out_of_range("poison plan: class out of range");
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("poison plan: rate must lie in [0, 1]");
  trigger.validate(static_cast<std::size_t>(data.channels));
}

std::size_t poison_count(double rate, std::size_t source_size) {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(source_size) + 1e-9));
}

std::vector<std::size_t> poisoned_indices(const Dataset& data, const PoisonPlan& plan) {
  plan.validate(data);
  std::vector<std::size_t> pool = data.indices_of(plan.source);
  if (pool.empty()) throw std::invalid_argument("poison plan: source class has no samples");
  const std::size_t k = poison_count(plan.rate, pool.size());
  std::mt19937_64 rng(plan.seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Dataset poison_dataset(const Dataset& data, const PoisonPlan& plan) {
  Dataset out = data;
  for (std::size_t i : poisoned_indices(data, plan)) {
    out.samples[i].input = apply_trigger(data.samples[i].input, plan.trigger);
    out.samples[i].label = plan.target;
  }
  return out;
}

AsrResult attack_success_rate(const Network& net, const Dataset& test, const PoisonPlan& plan) {
  plan.validate(test);
  const auto source = test.indices_of(plan.source);
  if (source.empty()) throw std::invalid_argument("attack_success_rate: no source-class test samples");
  AsrResult r;
  r.source_samples = source.size();
  std::size_t correct = 0;
  for (const auto& s : test.samples)
    if (predict(forward(net, s.input).scores) == s.label) ++correct;
  r.clean_accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  std::size_t hit = 0, confused = 0;
  for (std::size_t i : source) {
    const SpikeTensor& x = test.samples[i].input;
    if (predict(forward(net, apply_trigger(x, plan.trigger)).scores) == plan.target) ++hit;
    if (predict(forward(net, x).scores) == plan.target) ++confused;
  }
  r.asr = static_cast<double>(hit) / static_cast<double>(source.size());
  r.base_confusion = static_cast<double>(confused) / static_cast<double>(source.size());
  return r;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> draw_source_targets(Eigen::Index n_classes, std::size_t runs,
                                                                       std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("draw_source_targets: need at least 2 classes");
  std::mt19937_64 rng(seed);
  const auto k = static_cast<std::uint64_t>(n_classes);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (std::size_t r = 0; r < runs; ++r) {
    const auto s = static_cast<Eigen::Index>(rng() % k);
    auto t = static_cast<Eigen::Index>(rng() % (k - 1));
    if (t >= s) ++t;
    out.emplace_back(s, t);
  }
  return out;
}

Matrix clean_adversarial_cka(const Network& net, const Dataset& clean, const std::vector<double>& epsilons,
                             FgsmMode mode, RepresentationSource source) {
  const auto reps = layer_representations(net, clean, 0, clean.size(), source);
  Matrix out(static_cast<Eigen::Index>(net.size()), static_cast<Eigen::Index>(epsilons.size()));
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const auto adv = layer_representations(net, fgsm_inputs(net, clean, {epsilons[e], mode}), source);
    for (std::size_t l = 0; l < net.size(); ++l) {
      double v = std::nan("");
      try {
        v = cka(reps[l], adv[l], HsicEstimator::kUnbiased);
      } catch (const std::domain_error&) {
        // silent layer: undefined, left as NaN
      }
      out(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(e)) = v;
    }
  }
  return out;
}

Matrix robustness_cka_delta(const Network& net_ff, const Network& net_rec, const Dataset& clean,
                            const std::vector<double>& epsilons, FgsmMode mode, RepresentationSource source) {
  if (net_ff.size() != net_rec.size())
    throw std::invalid_argument("robustness_cka_delta: architectures must have the same depth");
  return clean_adversarial_cka(net_rec, clean, epsilons, mode, source) -
         clean_adversarial_cka(net_ff, clean, epsilons, mode, source);
}

}  // namespace snnbench
