#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snnbench/checkpoint.hpp"
#include "snnbench/cka.hpp"
#include "snnbench/format.hpp"
#include "snnbench/probe.hpp"
#include "snnbench/report.hpp"

using namespace snnbench;
namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string config_file;
  std::string preset_name;
  std::vector<std::uint64_t> seeds;
  std::string out = "out";
  std::string format = "both";
  std::optional<std::string> method, arch;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr;
  std::size_t threads = 0;
  bool no_checkpoints = false;
};

struct AttackArgs {
  std::string model;
  std::vector<double> eps = kDefaultEpsilons;
  std::string mode = "ann-counterpart";
  std::string out;
};

struct AnalyzeArgs {
  std::string model;
  std::string against;
  bool cka = false;
  bool fisher = false;
  std::size_t batch = 128;
  std::string source = "spikes";
  std::string label = "sampled";
  std::string normalization = "final";
  std::string out = ".";
};

struct ProbeArgs {
  std::string method;
  std::vector<std::size_t> t = {10, 20, 50, 100};
  std::vector<Eigen::Index> sizes = {32, 64, 128};
  std::string arch = "ff";
  std::size_t repeats = 3;
  std::string out;
};

struct ReportArgs {
  std::vector<std::string> dirs;
  std::string out;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

struct LoadedModel {
  Checkpoint ckpt;
  ExperimentConfig config;
  std::uint64_t seed = 0;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  m.ckpt = load_checkpoint(path);
  if (!m.ckpt.meta.contains("config"))
    throw std::runtime_error(path + ": sidecar has no config, cannot rebuild the task data");
  m.config = config_from_yaml(m.ckpt.meta.at("config").get<std::string>());
  m.seed = m.ckpt.meta.value("seed", std::uint64_t{0});
  return m;
}

int run_train(const TrainArgs& a) {
  ExperimentConfig c = !a.config_file.empty()   ? load_config(a.config_file)
                       : !a.preset_name.empty() ? preset(a.preset_name)
                                                : ExperimentConfig{};
  if (a.method) c.method = method_from_string(*a.method);
  if (a.arch) c.architecture = architecture_from_string(*a.arch);
  if (a.epochs) c.epochs = *a.epochs;
  if (a.batch_size) c.optimizer.batch_size = *a.batch_size;
  if (a.lr) c.optimizer.learning_rate = *a.lr;
  if (!a.seeds.empty()) c.seeds = a.seeds;

  RunOptions opt;
  opt.keep_models = !a.no_checkpoints;
  opt.threads = a.threads;
  const ExperimentRun run = run_experiment(c, opt);
  const ExperimentReport& r = run.report;

  const fs::path out(a.out);
  if (a.format == "csv" || a.format == "both") emit_report(r, ReportFormat::kCsv, out);
  if (a.format == "json" || a.format == "both") emit_report(r, ReportFormat::kJson, out);
  const std::string prefix = report_prefix(c);
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    const SeedReport& s = r.seeds[i];
    if (opt.keep_models && s.has_accuracy()) {
      nlohmann::json meta = {{"config", config_to_yaml(c)},
                             {"seed", s.seed},
                             {"method", to_string(c.method)},
                             {"architecture", to_string(c.architecture)},
                             {"train_accuracy", s.train_accuracy},
                             {"test_accuracy", s.test_accuracy}};
      save_checkpoint(out / (prefix + "_" + std::to_string(s.seed) + ".ckpt"), run.models[i], meta);
    }
    std::cerr << prefix << " seed " << s.seed;
    if (s.has_accuracy())
      std::cerr << ": train " << format_double(s.train_accuracy) << " test " << format_double(s.test_accuracy);
    if (!s.ok()) std::cerr << " FAILED at " << s.failed_stage << ": " << s.error;
    std::cerr << "\n";
  }
  if (!r.seeds.empty())
    std::cerr << prefix << " mean: train " << format_double(r.mean_train_accuracy()) << " test "
              << format_double(r.mean_test_accuracy()) << "\n";
  return r.ok() ? 0 : 1;
}

int run_attack(const AttackArgs& a) {
  const LoadedModel m = load_model(a.model);
  const Dataset test = load_task(m.config.task).test;
  const FgsmMode mode = fgsm_mode_from_string(a.mode);
  const std::string method(to_string(m.config.method)), arch(to_string(m.config.architecture));
  std::ostringstream o;
  o << kFgsmHeader << "\n";
  for (double eps : a.eps)
    o << method << "," << arch << "," << format_double(eps) << ","
      << format_double(fgsm_accuracy(m.ckpt.net, test, {eps, mode})) << ",," << m.seed << "\n";
  write_text(a.out, o.str());
  return 0;
}

int run_analyze(const AnalyzeArgs& a) {
  const LoadedModel m = load_model(a.model);
  const Dataset test = load_task(m.config.task).test;
  const fs::path out(a.out);
  fs::create_directories(out);
  const std::string stem = fs::path(a.model).stem().string();

  if (a.cka || !a.fisher) {
    Network other = m.ckpt.net;
    if (!a.against.empty()) other = load_checkpoint(a.against).net;
    CkaOptions opt;
    opt.batch_size = a.batch;
    opt.total = test.size();
    opt.source = representation_source_from_string(a.source);
    const std::string name = a.against.empty() ? stem : stem + "_vs_" + fs::path(a.against).stem().string();
    write_text((out / (name + "_cka.csv")).string(), cka_csv(cka_matrix(m.ckpt.net, other, test, opt)));
  }
  if (a.fisher) {
    FisherOptions opt;
    opt.label_mode = fisher_label_mode_from_string(a.label);
    opt.seed = m.seed;
    opt.gradient = rule_gradient(m.config, m.ckpt.net, test.n_classes, m.seed);
    const auto curve = fisher_curve(m.ckpt.net, test, fisher_normalization_from_string(a.normalization), opt);
    write_text((out / (stem + "_fisher.csv")).string(), fisher_csv(curve));
  }
  return 0;
}

int run_probe(const ProbeArgs& a) {
  ProbeOptions opt;
  opt.architecture = architecture_from_string(a.arch);
  opt.repeats = a.repeats;
  const ProbeTable t = complexity_probe(method_from_string(a.method), a.sizes, a.t, opt);
  write_text(a.out, probe_csv(t));
  std::cerr << a.method << " slopes: memory vs T " << format_double(t.memory_slope_t) << ", memory vs N "
            << format_double(t.memory_slope_n) << ", time vs T " << format_double(t.time_slope_t) << "\n";
  return 0;
}

int run_report(const ReportArgs& a) {
  std::vector<fs::path> files;
  for (const auto& d : a.dirs) {
    if (!fs::is_directory(d)) throw std::runtime_error(d + " is not a directory");
    for (const auto& e : fs::directory_iterator(d))
      if (e.path().filename().string().ends_with("_report.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no *_report.json files found");

  std::ostringstream o;
  o << "method,architecture,seeds,failed,mean_train_accuracy,mean_test_accuracy,epsilon,mean_fgsm_accuracy\n";
  for (const auto& f : files) {
    const ExperimentReport r = load_report(f);
    std::size_t failed = 0;
    for (const auto& s : r.seeds) failed += !s.ok();
    const std::string head = std::string(to_string(r.config.method)) + "," +
                             std::string(to_string(r.config.architecture)) + "," + std::to_string(r.seeds.size()) +
                             "," + std::to_string(failed) + "," + format_double(r.mean_train_accuracy()) + "," +
                             format_double(r.mean_test_accuracy());
    const auto fg = r.mean_fgsm_accuracy();
    if (fg.empty()) o << head << ",,\n";
    for (std::size_t k = 0; k < fg.size(); ++k)
      o << head << "," << format_double(r.config.attacks.fgsm_epsilons[k]) << "," << format_double(fg[k]) << "\n";
  }
  write_text(a.out, o.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking network learning-rule benchmark"};
  app.require_subcommand(1);

  TrainArgs ta;
  bool list_presets = false;
  auto* train = app.add_subcommand("train", "train one method/architecture over the listed seeds");
  auto* cfg_opt = train->add_option("--config", ta.config_file, "YAML experiment config")->check(CLI::ExistingFile);
  train->add_option("--preset", ta.preset_name, "start from a named preset")->excludes(cfg_opt);
  train->add_flag("--list-presets", list_presets, "print preset names and exit");
  train->add_option("--seed", ta.seeds, "seed(s); repeat or comma-separate")->delimiter(',');
  train->add_option("--out", ta.out, "output directory");
  train->add_option("--format", ta.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  train->add_option("--method", ta.method, "bptt, eprop or decolle");
  train->add_option("--arch", ta.arch, "ff or rec");
  train->add_option("--epochs", ta.epochs);
  train->add_option("--lr", ta.lr, "learning rate");
  train->add_option("--batch-size", ta.batch_size);
  train->add_option("--threads", ta.threads, "seed workers (default BENCH_THREADS or all cores)");
  train->add_flag("--no-checkpoints", ta.no_checkpoints);

  AttackArgs aa;
  auto* attack = app.add_subcommand("attack", "FGSM sweep on a saved model's test split");
  attack->add_option("--model", aa.model, "checkpoint file")->required()->check(CLI::ExistingFile);
  attack->add_option("--fgsm-eps", aa.eps, "comma-separated epsilons")->delimiter(',');
  attack->add_option("--mode", aa.mode, "ann-counterpart or surrogate-direct");
  attack->add_option("--out", aa.out, "CSV file (default stdout)");

  AnalyzeArgs na;
  auto* analyze = app.add_subcommand("analyze", "layerwise CKA and Fisher profiles of a saved model");
  analyze->add_option("--model", na.model, "checkpoint file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--against", na.against, "second checkpoint for cross-model CKA")->check(CLI::ExistingFile);
  analyze->add_flag("--cka", na.cka);
  analyze->add_flag("--fisher", na.fisher);
  analyze->add_option("--batch", na.batch, "CKA minibatch size");
  analyze->add_option("--source", na.source, "spikes or potentials");
  analyze->add_option("--fisher-label", na.label, "sampled, expected, argmax or label");
  analyze->add_option("--fisher-normalization", na.normalization, "none, final or per-timestep");
  analyze->add_option("--out", na.out, "output directory");

  ProbeArgs pa;
  auto* probe = app.add_subcommand("probe", "learning-state memory and time scaling");
  probe->add_option("--method", pa.method, "bptt, eprop or decolle")->required();
  probe->add_option("--t", pa.t, "T sweep, >= 3 values")->delimiter(',');
  probe->add_option("--sizes", pa.sizes, "hidden-size sweep, >= 3 values")->delimiter(',');
  probe->add_option("--arch", pa.arch, "ff or rec");
  probe->add_option("--repeats", pa.repeats, "gradient evaluations per point");
  probe->add_option("--out", pa.out, "CSV file (default stdout)");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "aggregate *_report.json files into one table");
  report->add_option("dirs", ra.dirs, "directories written by train")->required();
  report->add_option("--out", ra.out, "CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      if (list_presets) {
        for (const auto& n : preset_names()) std::cout << n << "\n";
        return 0;
      }
      return run_train(ta);
    }
    if (*attack) return run_attack(aa);
    if (*analyze) return run_analyze(na);
    if (*probe) return run_probe(pa);
    if (*report) return run_report(ra);
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
