// One PASS/FAIL line per acceptance criterion, with the measured numbers.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "snnbench/bptt.hpp"
#include "snnbench/probe.hpp"
#include "snnbench/report.hpp"
#include "support/cases.hpp"

using namespace snnbench;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, bool pass, const std::string& what, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << "  [" << std::setw(2) << id << "] " << what << ": " << detail << std::endl;
  if (!pass) ++failures;
}

void note(const std::string& line) { std::cout << "          " << line << "\n"; }

double cpu_seconds(std::clock_t since) { return static_cast<double>(std::clock() - since) / CLOCKS_PER_SEC; }

std::string fixed(double x, int digits = 4) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << x;
  return o.str();
}

std::string sci(double x) {
  std::ostringstream o;
  o << std::scientific << std::setprecision(2) << x;
  return o.str();
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------------------

void gradient_oracle() {
  const std::clock_t start = std::clock();
  std::mt19937_64 rng(20240601);
  const BpttOptions soft{SpikeMode::kSoft, ResetGradient::kFull, false};
  std::size_t total = 0, within = 0;
  const int instances = 25;
  for (int k = 0; k < instances; ++k) {
    const oracle::Instance inst = oracle::random_instance(rng, {3, 30, 8, true});
    const LossSpec loss{k % 2 ? LossKind::kMeanSquared : LossKind::kSoftmaxCrossEntropy};
    const Vector g = bptt_gradients(inst.net, inst.input, inst.target, loss, soft).grads.flatten();
    const Vector fd = oracle::finite_differences(inst.net, [&](const Network& n) {
                        return oracle::soft_loss(n, inst.input, inst.target, loss);
                      }).flatten();
    for (Eigen::Index i = 0; i < g.size(); ++i, ++total)
      // coordinates below 1e-6 in both are at the finite-difference noise floor
      within += oracle::relative_error(g[i], fd[i], 1e-6) <= 1e-4;
  }
  const double frac = static_cast<double>(within) / static_cast<double>(total);
  const double secs = cpu_seconds(start);
  verdict(1, frac >= 0.99 && secs < 60.0, "BPTT vs central finite differences",
          std::to_string(within) + "/" + std::to_string(total) + " coordinates within 1e-4 (" + fixed(100 * frac, 2) +
              "%), " + std::to_string(instances) + " instances, " + fixed(secs, 2) + " s CPU");
}

void eprop_equivalence() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const oracle::Instance inst = cases::single_layer_instance(rng, k);
    const FeedbackMatrices fb = make_feedback(inst.net, FeedbackMode::kSymmetric, 0);
    const LossSpec loss{k % 4 == 3 ? LossKind::kMeanSquared : LossKind::kSoftmaxCrossEntropy};
    const BpttResult b = bptt_gradients(inst.net, inst.input, inst.target, loss, {});
    for (SignalTiming timing : {SignalTiming::kPerStep, SignalTiming::kTerminal}) {
      const GradientResult e = eprop_gradients(inst.net, inst.input, inst.target, fb, loss, {timing});
      worst = std::max(worst, cases::max_relative(e.grads, b.grads));
    }
  }
  verdict(2, worst <= 1e-6, "e-prop equals BPTT on single-layer detached-reset nets",
          "max relative difference " + sci(worst) + " over 20 instances");
}

void decolle_naive() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const cases::DecolleCase c = cases::random_decolle_case(rng, k % 2 == 1);
    const GradientResult r = decolle_gradients(c.net, c.input, c.target, c.readouts);
    const auto ref = cases::naive_decolle(c.net, c.input, c.readouts, c.target);
    for (std::size_t l = 0; l < ref.size(); ++l) {
      worst = std::max(worst, (r.grads.layers[l].dw - ref[l].first).cwiseAbs().maxCoeff());
      if (ref[l].second) worst = std::max(worst, (*r.grads.layers[l].dv - *ref[l].second).cwiseAbs().maxCoeff());
    }
  }
  verdict(3, worst <= 1e-12, "DECOLLE update vs naive local-rule evaluation",
          "max abs difference " + sci(worst) + " over 20 instances");
}

void cka_suite() {
  std::mt19937_64 rng(5150);
  double self = 0.0, sym = 0.0, inv = 0.0, hsic = 0.0;
  for (int k = 0; k < 30; ++k) {
    const Eigen::Index b = 8 + static_cast<Eigen::Index>(rng() % 40), p = 2 + static_cast<Eigen::Index>(rng() % 10);
    const Matrix x = cases::gaussian(rng, b, p);
    const Matrix y = x.leftCols(p / 2 + 1) * cases::gaussian(rng, p / 2 + 1, 6) + 0.5 * cases::gaussian(rng, b, 6);
    for (HsicEstimator est : {HsicEstimator::kBiased, HsicEstimator::kUnbiased}) {
      self = std::max(self, std::abs(cka(x, x, est) - 1.0));
      sym = std::max(sym, std::abs(cka(x, y, est) - cka(y, x, est)));
      const double base = cka(x, y, est);
      inv = std::max(inv, std::abs(cka(x * cases::random_orthogonal(rng, p), y, est) - base));
      inv = std::max(inv, std::abs(cka(2.5 * x, y, est) - base));
      inv = std::max(inv, std::abs(cka(x, 0.1 * y * cases::random_orthogonal(rng, 6), est) - base));
    }
  }
  for (Eigen::Index b = 4; b <= 8; ++b)
    for (int k = 0; k < 6; ++k) {
      const Matrix kk = gram_linear(cases::gaussian(rng, b, 3)), ll = gram_linear(cases::gaussian(rng, b, 4));
      hsic = std::max(hsic, std::abs(hsic_unbiased(kk, ll) - cases::hsic_u_statistic(kk, ll)));
    }
  verdict(4, self <= 1e-6 && sym <= 1e-10 && inv <= 1e-6 && hsic <= 1e-10, "CKA property suite",
          "self " + sci(self) + ", symmetry " + sci(sym) + ", orthogonal/scale invariance " + sci(inv) +
              ", unbiased HSIC vs U-statistic " + sci(hsic));
}

void fisher_oracle() {
  const std::vector<double> xs = {0.25, 0.8, 1.5, 3.0};
  double worst = 0.0;
  for (double w : {-1.5, -0.2, 0.0, 0.6, 2.0}) {
    double closed = 0.0;
    for (double x : xs) {
      const double p = 1.0 / (1.0 + std::exp(-w * x));
      closed += p * (1.0 - p) * x * x;
    }
    closed /= static_cast<double>(xs.size());
    FisherOptions opt;
    opt.label_mode = FisherLabelMode::kExpected;
    worst = std::max(worst, std::abs(fisher_trace(cases::logistic_toy(w), cases::toy_data(xs), 1, opt).groups[0].value - closed));
  }

  NetworkConfig cfg;
  cfg.n_inputs = 12;
  cfg.hidden = {10, 8};
  cfg.n_classes = 3;
  cfg.recurrent = true;
  cfg.lif = {0.9, 0.7, 0.3, true};
  const Network net = init_network(cfg, 3);
  SynthSpec s;
  s.classes = 3;
  s.n_per_class = 4;
  s.t_steps = 8;
  s.channels = 12;
  const Dataset data = synth_pattern_dataset(s);
  double sum_err = 0.0;
  std::size_t profiles = 0;
  FisherOptions opt;
  opt.label_mode = FisherLabelMode::kExpected;
  for (const FisherProfile& p : fisher_curve(net, data, FisherNormalization::kPerTimestep, opt)) {
    double total = 0.0;
    for (const auto& g : p.groups) total += g.value;
    if (total == 0.0) continue;  // silent prefix, nothing to normalize
    sum_err = std::max(sum_err, std::abs(total - 1.0));
    ++profiles;
  }
  const auto final_curve = fisher_curve(net, data, FisherNormalization::kFinal, opt);
  double last = 0.0;
  for (const auto& g : final_curve.back().groups) last += g.value;
  sum_err = std::max(sum_err, std::abs(last - 1.0));
  verdict(5, worst <= 1e-6 && sum_err <= 1e-9 && profiles > 0, "Fisher trace vs logistic closed form",
          "max abs error " + sci(worst) + "; normalized profile sums within " + sci(sum_err) + " of 1 (" +
              std::to_string(profiles + 1) + " profiles)");
}

void complexity_scaling() {
  const std::clock_t start = std::clock();
  const std::vector<Eigen::Index> sizes = {32, 64, 128};
  const std::vector<std::size_t> ts = {10, 20, 50, 100, 200};
  const ProbeTable b = complexity_probe(Method::kBptt, sizes, ts);
  const ProbeTable e = complexity_probe(Method::kEprop, sizes, ts);
  const ProbeTable d = complexity_probe(Method::kDecolle, sizes, ts);
  const double secs = cpu_seconds(start);
  const bool pass = std::abs(b.memory_slope_t - 1.0) <= 0.15 && std::abs(e.memory_slope_t) <= 0.1 &&
                    std::abs(d.memory_slope_t) <= 0.1 && secs < 300.0;
  verdict(6, pass, "learning-state memory scaling in T",
          "slopes bptt " + fixed(b.memory_slope_t, 3) + ", eprop " + fixed(e.memory_slope_t, 3) + ", decolle " +
              fixed(d.memory_slope_t, 3) + "; " + fixed(secs, 1) + " s CPU");
  note("memory slope vs N: bptt " + fixed(b.memory_slope_n, 3) + ", eprop " + fixed(e.memory_slope_n, 3) +
       ", decolle " + fixed(d.memory_slope_n, 3) + "; time slope vs T: bptt " + fixed(b.time_slope_t, 3) +
       ", eprop " + fixed(e.time_slope_t, 3) + ", decolle " + fixed(d.time_slope_t, 3));
}

// ---------------------------------------------------------------------------

const std::vector<double> kSweep = {0.0, 0.001, 0.005, 0.01, 0.02, 0.05};

struct Trained {
  ExperimentRun run;
  double cpu = 0.0;
};

Trained train_preset(const std::string& name, bool fgsm) {
  ExperimentConfig c = preset(name);
  if (fgsm) c.attacks.fgsm_epsilons = kSweep;
  RunOptions opt;
  opt.keep_models = true;
  const std::clock_t start = std::clock();
  Trained t{run_experiment(c, opt), 0.0};
  t.cpu = cpu_seconds(start);
  return t;
}

std::string seed_list(const ExperimentReport& r, bool train) {
  std::string s;
  for (const auto& seed : r.seeds) s += (s.empty() ? "" : " ") + fixed(train ? seed.train_accuracy : seed.test_accuracy, 3);
  return s;
}

void desk_training(const Trained& b, const Trained& e, const Trained& d) {
  auto min_train = [](const ExperimentReport& r) {
    double m = 1.0;
    for (const auto& s : r.seeds) m = std::min(m, s.has_accuracy() ? s.train_accuracy : 0.0);
    return m;
  };
  const ExperimentReport &rb = b.run.report, &re = e.run.report, &rd = d.run.report;
  const double cpu = b.cpu + e.cpu + d.cpu;
  const bool thresholds = min_train(rb) >= 0.95 && min_train(re) >= 0.90 && min_train(rd) >= 0.85;
  const double tb = rb.mean_test_accuracy(), te = re.mean_test_accuracy(), td = rd.mean_test_accuracy();
  const bool ordering = tb >= te && te >= td;
  const bool ok = rb.ok() && re.ok() && rd.ok();
  verdict(7, ok && thresholds && ordering && cpu < 600.0, "desk-scale training on the synthetic task",
          std::string("every seed above its training threshold: ") + (thresholds ? "yes" : "no") +
              "; test means bptt " + fixed(tb) + ", eprop " + fixed(te) + ", decolle " + fixed(td) +
              " (ordering bptt >= eprop >= decolle " + (ordering ? "holds" : "violated") + "); " + fixed(cpu, 1) +
              " s CPU");
  note("train per seed  bptt [" + seed_list(rb, true) + "] eprop [" + seed_list(re, true) + "] decolle [" +
       seed_list(rd, true) + "]");
  note("test per seed   bptt [" + seed_list(rb, false) + "] eprop [" + seed_list(re, false) + "] decolle [" +
       seed_list(rd, false) + "]");
}

void fgsm_properties(const Trained& ff, const Trained& rec) {
  const Dataset test = load_task(ff.run.report.config.task).test;
  bool identity = true;
  double bound_excess = 0.0;
  for (const Trained* t : {&ff, &rec})
    for (const Network& net : t->run.models) {
      const double clean = evaluate(net, test).accuracy;
      for (FgsmMode mode : {FgsmMode::kAnnCounterpart, FgsmMode::kSurrogateDirect}) {
        identity = identity && fgsm_accuracy(net, test, {0.0, mode}) == clean;
        for (double eps : {0.001, 0.05}) {
          const auto adv = fgsm_inputs(net, test, {eps, mode});
          for (std::size_t i = 0; i < test.size(); ++i)
            bound_excess = std::max(
                bound_excess, (adv[i].data() - test.samples[i].input.data()).cwiseAbs().maxCoeff() - eps);
        }
      }
    }
  // Accuracies are k / |test|; compare summed correct counts so ties stay exact.
  const double n_test = static_cast<double>(test.size());
  auto correct = [&](const Trained& t, std::size_t k) {
    long long c = 0;
    for (const auto& s : t.run.report.seeds) c += std::llround(s.fgsm.at(k).accuracy * n_test);
    return c;
  };
  const auto mf = ff.run.report.mean_fgsm_accuracy(), mr = rec.run.report.mean_fgsm_accuracy();
  bool monotone = true, rec_ge = true;
  std::string sweep, counts;
  for (std::size_t k = 0; k < kSweep.size(); ++k) {
    if (k > 0) monotone = monotone && correct(ff, k) <= correct(ff, k - 1) && correct(rec, k) <= correct(rec, k - 1);
    rec_ge = rec_ge && correct(rec, k) >= correct(ff, k);
    sweep += (k ? ", " : "") + fixed(kSweep[k], 3) + ": " + fixed(mf[k], 3) + "/" + fixed(mr[k], 3);
    counts += (k ? ", " : "") + std::to_string(correct(ff, k)) + "/" + std::to_string(correct(rec, k));
  }
  verdict(8, identity && bound_excess <= 0.0 && monotone && rec_ge && ff.run.report.ok() && rec.run.report.ok(),
          "FGSM properties (bptt)",
          std::string("eps 0 identical: ") + (identity ? "yes" : "no") + "; bound excess " + sci(bound_excess) +
              "; non-increasing: " + (monotone ? "yes" : "no") + "; REC >= FF: " + (rec_ge ? "yes" : "no"));
  note("mean accuracy FF/REC by eps  " + sweep);
  note("correct of " + std::to_string(ff.run.report.seeds.size() * test.size()) + " FF/REC  " + counts);
}

void backdoor_properties() {
  ExperimentConfig c = preset("synthetic-bptt-ff");
  c.seeds = {1};
  c.attacks.backdoor_rates = {0.0, 0.9};
  c.attacks.backdoor_runs = 5;
  c.attacks.backdoor_seed = 17;
  const ExperimentReport r = run_experiment(c).report;
  const TaskData data = load_task(c.task);

  // exact counts: labels flipped by poisoning, counted directly
  bool counts = r.ok();
  const TriggerSpec trigger = default_trigger(static_cast<std::size_t>(data.train.channels));
  for (double rate : {0.0, 0.1, 0.29, 0.5, 0.9, 1.0}) {
    PoisonPlan plan{0, 1, rate, trigger, 5};
    const Dataset p = poison_dataset(data.train, plan);
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < p.size(); ++i) flipped += p.samples[i].label != data.train.samples[i].label;
    const std::size_t n_src = data.train.indices_of(0).size();
    const auto expected = static_cast<std::size_t>(std::llround(rate * 100.0)) * n_src / 100;
    counts = counts && flipped == expected;
  }

  bool noise_ok = true, high_ok = true;
  std::vector<double> asr0, base0, asr9;
  for (const auto& b : r.seeds.empty() ? std::vector<BackdoorPoint>{} : r.seeds[0].backdoor) {
    const std::size_t n_src_train = data.train.indices_of(b.source).size();
    counts = counts && b.poisoned == static_cast<std::size_t>(std::llround(b.rate * 100.0)) * n_src_train / 100;
    if (b.rate == 0.0) {
      // two-proportion z test, pooled: ASR sample vs base confusion sample on the same source split
      const double n = static_cast<double>(data.test.indices_of(b.source).size());
      const double pooled = (b.asr + b.base_confusion) / 2.0;
      const double sd = std::sqrt(2.0 * pooled * (1.0 - pooled) / n);
      noise_ok = noise_ok && std::abs(b.asr - b.base_confusion) <= 3.0 * sd;
      asr0.push_back(b.asr);
      base0.push_back(b.base_confusion);
    } else {
      high_ok = high_ok && b.asr >= 0.7;
      asr9.push_back(b.asr);
    }
  }
  const bool ran = !asr0.empty() && !asr9.empty();
  verdict(9, ran && counts && noise_ok && high_ok, "backdoor properties (bptt-FF)",
          std::string("counts exact: ") + (counts ? "yes" : "no") + "; rate 0 ASR " +
              (ran ? fixed(mean(asr0), 3) : "-") + " vs base confusion " + (ran ? fixed(mean(base0), 3) : "-") +
              " (within 3 sd every run: " + (noise_ok ? "yes" : "no") + "); rate 0.9 ASR mean " +
              (ran ? fixed(mean(asr9), 3) : "-") + ", min " +
              (ran ? fixed(*std::min_element(asr9.begin(), asr9.end()), 3) : "-"));
  if (!r.ok()) note("stage failure: " + r.seeds[0].failed_stage + ": " + r.seeds[0].error);
}

void cka_delta(const Trained& ff, const Trained& rec) {
  const Dataset test = load_task(ff.run.report.config.task).test;
  const std::vector<double> eps(kSweep.begin() + 1, kSweep.end());
  Matrix sum;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < ff.run.models.size(); ++s) {
    const Matrix d = robustness_cka_delta(ff.run.models[s], rec.run.models[s], test, eps);
    sum = s ? Matrix(sum + d) : d;
    total += d.sum();
    n += static_cast<std::size_t>(d.size());
  }
  const double m = total / static_cast<double>(n);
  verdict(10, std::isfinite(m) && m >= 0.0, "REC - FF clean-vs-adversarial CKA (bptt)",
          "mean delta " + sci(m) + " over " + std::to_string(ff.run.models.size()) + " seed pairs, " +
              std::to_string(sum.rows()) + " layers, " + std::to_string(eps.size()) + " epsilons");
  std::string per_layer;
  for (Eigen::Index l = 0; l < sum.rows(); ++l)
    per_layer += (l ? ", " : "") + sci(sum.row(l).mean() / static_cast<double>(ff.run.models.size()));
  note("mean delta per layer " + per_layer);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "snnbench_acceptance";
  fs::remove_all(root);
  std::size_t compared = 0, differing = 0;
  for (const char* name : {"synthetic-bptt-rec", "synthetic-eprop-ff", "synthetic-decolle-rec"}) {
    ExperimentConfig c = preset(name);
    c.task.train_per_class = 30;
    c.task.test_per_class = 20;
    c.epochs = 3;
    c.seeds = {1, 2, 3};
    c.analysis.cka = true;
    c.analysis.cka_batch = 16;
    c.analysis.fisher = true;
    c.attacks.fgsm_epsilons = {0.0, 0.01, 0.05};
    c.attacks.backdoor_rates = {0.5};
    c.attacks.backdoor_runs = 1;
    for (std::size_t threads : {1, 3}) {
      RunOptions opt;
      opt.threads = threads;
      const ExperimentReport r = run_experiment(c, opt).report;
      const fs::path dir = root / std::to_string(threads);
      emit_report(r, ReportFormat::kCsv, dir);
      emit_report(r, ReportFormat::kJson, dir);
    }
  }
  for (const auto& e : fs::directory_iterator(root / "1")) {
    if (e.path().filename().string().ends_with("_timing.csv")) continue;
    ++compared;
    if (slurp(e.path()) != slurp(root / "3" / e.path().filename())) ++differing;
  }
  verdict(11, compared > 0 && differing == 0, "byte-identical reports on rerun",
          std::to_string(compared) + " files compared across reruns with 1 and 3 workers, " +
              std::to_string(differing) + " differ");
}

}  // namespace

int main() {
  try {
    gradient_oracle();
    eprop_equivalence();
    decolle_naive();
    cka_suite();
    fisher_oracle();
    complexity_scaling();

    const Trained bptt_ff = train_preset("synthetic-bptt-ff", true);
    const Trained eprop_ff = train_preset("synthetic-eprop-ff", false);
    const Trained decolle_ff = train_preset("synthetic-decolle-ff", false);
    const Trained bptt_rec = train_preset("synthetic-bptt-rec", true);
    desk_training(bptt_ff, eprop_ff, decolle_ff);
    fgsm_properties(bptt_ff, bptt_rec);
    backdoor_properties();
    cka_delta(bptt_ff, bptt_rec);
    determinism();
  } catch (const std::exception& e) {
    std::cout << "FAIL  acceptance run aborted: " << e.what() << "\n";
    return 100;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << "\n";
  return failures;
}
