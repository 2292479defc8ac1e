#include "snnbench/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "snnbench/bptt.hpp"
#include "snnbench/cka.hpp"

namespace snnbench {

namespace {

// splitmix64 finalizer; derives independent streams from (seed, salt).
std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kFeedbackSalt = 0xFEEDull;
constexpr std::uint64_t kReadoutSalt = 0xDEC011Eull;
constexpr std::uint64_t kShuffleSalt = 0x5F1ull;
constexpr std::uint64_t kFisherSalt = 0xF15ull;
constexpr std::uint64_t kPoisonSalt = 0xBADull;

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nan("");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Rule-specific state fixed at initialization.
struct Rule {
  FeedbackMatrices feedback;
  DecolleReadouts readouts;
  GradientFn gradient;
};

Rule make_rule(const ExperimentConfig& c, Network& net, Eigen::Index n_classes, std::uint64_t seed) {
  Rule r;
  const LossSpec loss{c.loss};
  switch (c.method) {
    case Method::kBptt:
      r.gradient = bptt_gradient_fn(loss);
      break;
    case Method::kEprop:
      r.feedback = make_feedback(net, c.feedback, mix(seed, kFeedbackSalt));
      r.gradient = eprop_gradient_fn(r.feedback, loss, {c.eprop_timing});
      break;
    case Method::kDecolle:
      r.readouts = make_decolle_readouts(net, n_classes, mix(seed, kReadoutSalt));
      r.gradient = decolle_gradient_fn(r.readouts, loss);
      break;
  }
  return r;
}

}  // namespace

double ExperimentReport::mean_train_accuracy() const {
  std::vector<double> xs;
  for (const auto& s : seeds)
    if (s.has_accuracy()) xs.push_back(s.train_accuracy);
  return mean_of(xs);
}

double ExperimentReport::mean_test_accuracy() const {
  std::vector<double> xs;
  for (const auto& s : seeds)
    if (s.has_accuracy()) xs.push_back(s.test_accuracy);
  return mean_of(xs);
}

std::vector<double> ExperimentReport::mean_fgsm_accuracy() const {
  std::vector<double> out;
  for (std::size_t e = 0; e < config.attacks.fgsm_epsilons.size(); ++e) {
    std::vector<double> xs;
    for (const auto& s : seeds)
      if (e < s.fgsm.size()) xs.push_back(s.fgsm[e].accuracy);
    out.push_back(mean_of(xs));
  }
  return out;
}

bool ExperimentReport::ok() const {
  for (const auto& s : seeds)
    if (!s.ok()) return false;
  return true;
}

std::size_t bench_threads() {
  if (const char* env = std::getenv("BENCH_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n >= 1) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

TaskData load_task(const TaskSpec& task) {
  TaskData d;
  if (task.kind == "synthetic") {
    SynthSpec s;
    s.classes = task.classes;
    s.t_steps = task.t_steps;
    s.channels = task.channels;
    s.jitter = task.jitter;
    s.density = task.density;
    s.seed = task.seed;
    s.n_per_class = task.train_per_class;
    d.train = synth_pattern_dataset(s, mix(task.seed, 1));
    s.n_per_class = task.test_per_class;
    d.test = synth_pattern_dataset(s, mix(task.seed, 2));
  } else {
    const DatasetManifest m = load_manifest(task.manifest);
    d.train = load_manifest_split(m, true);
    d.test = load_manifest_split(m, false);
  }
  return d;
}

TrainOutcome train_network(const ExperimentConfig& c, const Dataset& train, const Dataset* test, std::uint64_t seed) {
  TrainOutcome out;
  out.net = init_network(c.network_config(train.channels, train.n_classes), seed);
  const Rule rule = make_rule(c, out.net, train.n_classes, seed);
  Optimizer opt(c.optimizer);
  const LossSpec loss{c.loss};
  for (std::size_t e = 0; e < c.epochs; ++e) {
    const std::uint64_t shuffle = mix(mix(seed, kShuffleSalt), e);
    EpochStats st;
    switch (c.method) {
      case Method::kBptt:
        st = train_epoch_bptt(out.net, train, opt, shuffle, loss);
        break;
      case Method::kEprop:
        st = train_epoch_eprop(out.net, train, rule.feedback, opt, shuffle, loss, {c.eprop_timing});
        break;
      case Method::kDecolle:
        st = train_epoch_decolle(out.net, train, rule.readouts, opt, shuffle, loss, {c.decolle_cadence});
        break;
    }
    EpochRecord rec{e + 1, st.mean_loss, st.accuracy, std::nan("")};
    if (test && !test->empty()) rec.test_accuracy = evaluate(out.net, *test, loss).accuracy;
    out.curve.push_back(rec);
  }
  if (!train.empty())
    out.learning_state_peak =
        rule.gradient(out.net, train.samples[0].input, train.samples[0].label).learning_state_peak;
  return out;
}

GradientFn rule_gradient(const ExperimentConfig& config, const Network& net, Eigen::Index n_classes,
                         std::uint64_t seed) {
  Network scratch = net;
  return make_rule(config, scratch, n_classes, seed).gradient;
}

namespace {

SeedReport run_seed(const ExperimentConfig& c, const TaskData& data, std::uint64_t seed, Network* keep) {
  SeedReport r;
  r.seed = seed;
  const auto started = std::chrono::steady_clock::now();
  std::string stage;
  try {
    stage = "train";
    TrainOutcome t = train_network(c, data.train, &data.test, seed);
    r.curve = std::move(t.curve);
    r.learning_state_peak = t.learning_state_peak;
    Network& net = t.net;

    stage = "evaluate";
    r.train_accuracy = evaluate(net, data.train, {c.loss}).accuracy;
    r.test_accuracy = evaluate(net, data.test, {c.loss}).accuracy;
    if (keep) *keep = net;

    if (c.analysis.cka) {
      stage = "cka";
      CkaOptions opt;
      opt.batch_size = c.analysis.cka_batch;
      opt.total = data.test.size();
      r.cka = cka_matrix(net, net, data.test, opt);
    }
    if (c.analysis.fisher) {
      stage = "fisher";
      FisherOptions opt;
      opt.label_mode = c.analysis.fisher_label;
      opt.seed = mix(seed, kFisherSalt);
      // the redrawn feedback and readouts equal the training ones (same seed, never trained)
      opt.gradient = rule_gradient(c, net, data.train.n_classes, seed);
      r.fisher = fisher_curve(net, data.test, c.analysis.fisher_normalization, opt);
    }
    if (!c.attacks.fgsm_epsilons.empty()) {
      stage = "fgsm";
      for (double eps : c.attacks.fgsm_epsilons)
        r.fgsm.push_back({eps, fgsm_accuracy(net, data.test, {eps, c.attacks.fgsm_mode})});
    }
    if (!c.attacks.backdoor_rates.empty()) {
      stage = "backdoor";
      const auto pairs = draw_source_targets(data.train.n_classes, c.attacks.backdoor_runs, c.attacks.backdoor_seed);
      const TriggerSpec trigger =
          default_trigger(static_cast<std::size_t>(data.train.channels),
                          c.attacks.trigger_width ? std::optional<std::size_t>(c.attacks.trigger_width) : std::nullopt);
      for (double rate : c.attacks.backdoor_rates)
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          PoisonPlan plan;
          plan.source = pairs[k].first;
          plan.target = pairs[k].second;
          plan.rate = rate;
          plan.trigger = trigger;
          plan.seed = mix(mix(c.attacks.backdoor_seed, kPoisonSalt), k);
          const Dataset poisoned = poison_dataset(data.train, plan);
          const TrainOutcome bt = train_network(c, poisoned, nullptr, seed);
          const AsrResult a = attack_success_rate(bt.net, data.test, plan);
          r.backdoor.push_back({rate, k, plan.source, plan.target, poison_count(rate, data.train.indices_of(plan.source).size()),
                                a.asr, a.clean_accuracy, a.base_confusion});
        }
    }
  } catch (const std::exception& e) {
    r.failed_stage = stage;
    r.error = e.what();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

}  // namespace

ExperimentRun run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  ExperimentRun run;
  run.report.config = config;
  const TaskData data = load_task(config.task);

  const std::size_t n = config.seeds.size();
  run.report.seeds.resize(n);
  if (options.keep_models) run.models.resize(n);
  const std::size_t workers = std::min(n, options.threads ? options.threads : bench_threads());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++)
      run.report.seeds[i] = run_seed(config, data, config.seeds[i], options.keep_models ? &run.models[i] : nullptr);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return run;
}

}  // namespace snnbench
