#include "snnbench/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "snnbench/format.hpp"

namespace snnbench {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kBptt: return "bptt";
    case Method::kEprop: return "eprop";
    case Method::kDecolle: return "decolle";
  }
  return "bptt";
}

Method method_from_string(std::string_view name) {
  if (name == "bptt") return Method::kBptt;
  if (name == "eprop") return Method::kEprop;
  if (name == "decolle") return Method::kDecolle;
  throw std::invalid_argument("unknown method: " + std::string(name) + " (bptt, eprop, decolle)");
}

std::string_view to_string(Architecture arch) { return arch == Architecture::kFF ? "ff" : "rec"; }

Architecture architecture_from_string(std::string_view name) {
  if (name == "ff" || name == "FF") return Architecture::kFF;
  if (name == "rec" || name == "REC") return Architecture::kREC;
  throw std::invalid_argument("unknown architecture: " + std::string(name) + " (ff, rec)");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config: " + field + " " + why);
  };
  if (task.kind == "synthetic") {
    if (task.classes < 2) fail("task.classes", "must be >= 2");
    if (task.train_per_class == 0 || task.test_per_class == 0) fail("task.*_per_class", "must be positive");
    if (task.t_steps == 0 || task.channels <= 0) fail("task.t_steps/channels", "must be positive");
    if (!(task.jitter >= 0.0 && task.jitter <= 1.0)) fail("task.jitter", "must lie in [0, 1]");
    if (!(task.density > 0.0 && task.density < 1.0)) fail("task.density", "must lie in (0, 1)");
  } else if (task.kind == "manifest") {
    if (task.manifest.empty()) fail("task.manifest", "is required for manifest tasks");
  } else {
    fail("task.kind", "must be synthetic or manifest");
  }
  for (Eigen::Index h : hidden)
    if (h <= 0) fail("hidden", "sizes must be positive");
  if (method == Method::kDecolle && hidden.empty()) fail("hidden", "needs at least one layer for decolle");
  lif.validate();
  surrogate.validate();
  optimizer.validate();
  if (seeds.empty()) fail("seeds", "must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) fail("seeds", "must be distinct");
  if (analysis.cka_batch < 4) fail("analysis.cka_batch", "must be >= 4");
  for (double e : attacks.fgsm_epsilons)
    if (!(e >= 0.0) || !std::isfinite(e)) fail("attacks.fgsm.epsilons", "must be >= 0");
  for (double r : attacks.backdoor_rates)
    if (!(r >= 0.0 && r <= 1.0)) fail("attacks.backdoor.rates", "must lie in [0, 1]");
  if (attacks.backdoor_runs == 0) fail("attacks.backdoor.runs", "must be positive");
}

NetworkConfig ExperimentConfig::network_config(Eigen::Index n_inputs, Eigen::Index n_classes) const {
  NetworkConfig c;
  c.n_inputs = n_inputs;
  c.hidden = hidden;
  c.n_classes = n_classes;
  c.recurrent = architecture == Architecture::kREC;
  c.class_layer = method != Method::kDecolle;
  c.readout = readout;
  c.lif = lif;
  c.surrogate = surrogate;
  return c;
}

// ---- YAML -------------------------------------------------------------------

namespace {

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw std::invalid_argument("config: " + where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

template <typename E, typename F>
void read_enum(const YAML::Node& node, const char* key, E& out, F parse) {
  if (node[key]) out = parse(node[key].as<std::string>());
}

std::string list(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + format_double(xs[i]);
  return s + "]";
}

template <typename T>
std::string int_list(const std::vector<T>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + std::to_string(xs[i]);
  return s + "]";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ExperimentConfig config_from_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  if (root.IsNull()) return c;
  try {
    check_keys(root, "top level",
               {"name", "preset", "task", "method", "architecture", "network", "lif", "surrogate", "loss", "optimizer",
                "epochs", "seeds", "eprop", "decolle", "analysis", "attacks"});
    if (root["preset"]) c = preset(root["preset"].as<std::string>());
    read(root, "name", c.name);
    read_enum(root, "method", c.method, method_from_string);
    read_enum(root, "architecture", c.architecture, architecture_from_string);
    read_enum(root, "loss", c.loss, loss_kind_from_string);
    read(root, "epochs", c.epochs);
    read(root, "seeds", c.seeds);
    if (const auto t = root["task"]) {
      check_keys(t, "task", {"kind", "classes", "train_per_class", "test_per_class", "t_steps", "channels", "jitter",
                             "density", "seed", "manifest"});
      read(t, "kind", c.task.kind);
      read(t, "classes", c.task.classes);
      read(t, "train_per_class", c.task.train_per_class);
      read(t, "test_per_class", c.task.test_per_class);
      read(t, "t_steps", c.task.t_steps);
      read(t, "channels", c.task.channels);
      read(t, "jitter", c.task.jitter);
      read(t, "density", c.task.density);
      read(t, "seed", c.task.seed);
      if (t["manifest"]) c.task.manifest = t["manifest"].as<std::string>();
    }
    if (const auto n = root["network"]) {
      check_keys(n, "network", {"hidden", "readout"});
      read(n, "hidden", c.hidden);
      read_enum(n, "readout", c.readout, readout_mode_from_string);
    }
    if (const auto l = root["lif"]) {
      check_keys(l, "lif", {"alpha_syn", "alpha_mem", "v_th", "refractory_subtract"});
      read(l, "alpha_syn", c.lif.alpha_syn);
      read(l, "alpha_mem", c.lif.alpha_mem);
      read(l, "v_th", c.lif.v_th);
      read(l, "refractory_subtract", c.lif.refractory_subtract);
    }
    if (const auto s = root["surrogate"]) {
      check_keys(s, "surrogate", {"kind", "slope"});
      read_enum(s, "kind", c.surrogate.kind, surrogate_kind_from_string);
      read(s, "slope", c.surrogate.slope);
    }
    if (const auto o = root["optimizer"]) {
      check_keys(o, "optimizer", {"kind", "learning_rate", "batch_size", "momentum", "beta1", "beta2", "epsilon"});
      read_enum(o, "kind", c.optimizer.kind, optimizer_kind_from_string);
      read(o, "learning_rate", c.optimizer.learning_rate);
      read(o, "batch_size", c.optimizer.batch_size);
      read(o, "momentum", c.optimizer.momentum);
      read(o, "beta1", c.optimizer.beta1);
      read(o, "beta2", c.optimizer.beta2);
      read(o, "epsilon", c.optimizer.epsilon);
    }
    if (const auto e = root["eprop"]) {
      check_keys(e, "eprop", {"feedback", "timing"});
      read_enum(e, "feedback", c.feedback, feedback_mode_from_string);
      read_enum(e, "timing", c.eprop_timing, signal_timing_from_string);
    }
    if (const auto d = root["decolle"]) {
      check_keys(d, "decolle", {"cadence"});
      read_enum(d, "cadence", c.decolle_cadence, update_cadence_from_string);
    }
    if (const auto a = root["analysis"]) {
      check_keys(a, "analysis", {"cka", "cka_batch", "fisher", "fisher_label", "fisher_normalization"});
      read(a, "cka", c.analysis.cka);
      read(a, "cka_batch", c.analysis.cka_batch);
      read(a, "fisher", c.analysis.fisher);
      read_enum(a, "fisher_label", c.analysis.fisher_label, fisher_label_mode_from_string);
      read_enum(a, "fisher_normalization", c.analysis.fisher_normalization, fisher_normalization_from_string);
    }
    if (const auto a = root["attacks"]) {
      check_keys(a, "attacks", {"fgsm", "backdoor"});
      if (const auto f = a["fgsm"]) {
        check_keys(f, "attacks.fgsm", {"epsilons", "mode"});
        read(f, "epsilons", c.attacks.fgsm_epsilons);
        read_enum(f, "mode", c.attacks.fgsm_mode, fgsm_mode_from_string);
      }
      if (const auto b = a["backdoor"]) {
        check_keys(b, "attacks.backdoor", {"rates", "runs", "seed", "trigger_width"});
        read(b, "rates", c.attacks.backdoor_rates);
        read(b, "runs", c.attacks.backdoor_runs);
        read(b, "seed", c.attacks.backdoor_seed);
        read(b, "trigger_width", c.attacks.trigger_width);
      }
    }
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

std::string config_to_yaml(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "name: " << quoted(c.name) << "\n";
  o << "method: " << to_string(c.method) << "\n";
  o << "architecture: " << to_string(c.architecture) << "\n";
  o << "task:\n";
  o << "  kind: " << c.task.kind << "\n";
  o << "  classes: " << c.task.classes << "\n";
  o << "  train_per_class: " << c.task.train_per_class << "\n";
  o << "  test_per_class: " << c.task.test_per_class << "\n";
  o << "  t_steps: " << c.task.t_steps << "\n";
  o << "  channels: " << c.task.channels << "\n";
  o << "  jitter: " << format_double(c.task.jitter) << "\n";
  o << "  density: " << format_double(c.task.density) << "\n";
  o << "  seed: " << c.task.seed << "\n";
  o << "  manifest: " << quoted(c.task.manifest.string()) << "\n";
  o << "network:\n";
  o << "  hidden: " << int_list(c.hidden) << "\n";
  o << "  readout: " << to_string(c.readout) << "\n";
  o << "lif:\n";
  o << "  alpha_syn: " << format_double(c.lif.alpha_syn) << "\n";
  o << "  alpha_mem: " << format_double(c.lif.alpha_mem) << "\n";
  o << "  v_th: " << format_double(c.lif.v_th) << "\n";
  o << "  refractory_subtract: " << (c.lif.refractory_subtract ? "true" : "false") << "\n";
  o << "surrogate:\n";
  o << "  kind: " << to_string(c.surrogate.kind) << "\n";
  o << "  slope: " << format_double(c.surrogate.slope) << "\n";
  o << "loss: " << to_string(c.loss) << "\n";
  o << "optimizer:\n";
  o << "  kind: " << to_string(c.optimizer.kind) << "\n";
  o << "  learning_rate: " << format_double(c.optimizer.learning_rate) << "\n";
  o << "  batch_size: " << c.optimizer.batch_size << "\n";
  o << "  momentum: " << format_double(c.optimizer.momentum) << "\n";
  o << "  beta1: " << format_double(c.optimizer.beta1) << "\n";
  o << "  beta2: " << format_double(c.optimizer.beta2) << "\n";
  o << "  epsilon: " << format_double(c.optimizer.epsilon) << "\n";
  o << "epochs: " << c.epochs << "\n";
  o << "seeds: " << int_list(c.seeds) << "\n";
  o << "eprop:\n";
  o << "  feedback: " << to_string(c.feedback) << "\n";
  o << "  timing: " << to_string(c.eprop_timing) << "\n";
  o << "decolle:\n";
  o << "  cadence: " << to_string(c.decolle_cadence) << "\n";
  o << "analysis:\n";
  o << "  cka: " << (c.analysis.cka ? "true" : "false") << "\n";
  o << "  cka_batch: " << c.analysis.cka_batch << "\n";
  o << "  fisher: " << (c.analysis.fisher ? "true" : "false") << "\n";
  o << "  fisher_label: " << to_string(c.analysis.fisher_label) << "\n";
  o << "  fisher_normalization: " << to_string(c.analysis.fisher_normalization) << "\n";
  o << "attacks:\n";
  o << "  fgsm:\n";
  o << "    epsilons: " << list(c.attacks.fgsm_epsilons) << "\n";
  o << "    mode: " << to_string(c.attacks.fgsm_mode) << "\n";
  o << "  backdoor:\n";
  o << "    rates: " << list(c.attacks.backdoor_rates) << "\n";
  o << "    runs: " << c.attacks.backdoor_runs << "\n";
  o << "    seed: " << c.attacks.backdoor_seed << "\n";
  o << "    trigger_width: " << c.attacks.trigger_width << "\n";
  return o.str();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig c = config_from_yaml(text.str());
  // manifest paths are relative to the config file
  if (c.task.kind == "manifest" && !c.task.manifest.empty() && c.task.manifest.is_relative())
    c.task.manifest = path.parent_path() / c.task.manifest;
  return c;
}

// ---- Presets ----------------------------------------------------------------

namespace {

struct Row {
  const char* dataset;
  Method method;
  Architecture arch;
  double alpha_syn, alpha_mem, v_th, lr;
  std::size_t batch;
};

// Decays, thresholds, learning rates and batch sizes per method and architecture.
constexpr Row kTable[] = {
    {"nmnist", Method::kBptt, Architecture::kFF, 0.9, 0.5, 0.9, 1e-4, 16},
    {"nmnist", Method::kEprop, Architecture::kFF, 0.99, 0.95, 0.2, 5e-3, 5},
    {"nmnist", Method::kDecolle, Architecture::kFF, 0.97, 0.92, 1.0, 1e-3, 72},
    {"nmnist", Method::kBptt, Architecture::kREC, 0.9, 0.5, 0.9, 1e-2, 256},
    {"nmnist", Method::kEprop, Architecture::kREC, 0.99, 0.95, 0.2, 5e-3, 4},
    {"nmnist", Method::kDecolle, Architecture::kREC, 0.97, 0.92, 1.0, 1e-5, 72},
    {"dvs", Method::kBptt, Architecture::kFF, 0.9, 0.5, 1.0, 1e-3, 16},
    {"dvs", Method::kEprop, Architecture::kFF, 0.95, 0.65, 0.3, 1e-3, 15},
    {"dvs", Method::kDecolle, Architecture::kFF, 0.9, 0.65, 0.9, 2e-4, 72},
    {"dvs", Method::kBptt, Architecture::kREC, 0.95, 0.5, 0.9, 1e-3, 32},
    {"dvs", Method::kEprop, Architecture::kREC, 0.95, 0.6, 0.7, 3e-3, 15},
    {"dvs", Method::kDecolle, Architecture::kREC, 0.05, 0.2, 1.0, 3e-5, 72},
};

std::string preset_name(const char* dataset, Method m, Architecture a) {
  return std::string(dataset) + "-" + std::string(to_string(m)) + "-" + std::string(to_string(a));
}

ExperimentConfig synthetic(Method m, Architecture a) {
  ExperimentConfig c;
  c.name = preset_name("synthetic", m, a);
  c.method = m;
  c.architecture = a;
  c.hidden = {120, 84};
  c.lif = {0.9, 0.5, 1.0, true};
  c.optimizer.kind = OptimizerKind::kAdam;
  c.optimizer.learning_rate = 1e-3;
  c.optimizer.batch_size = 16;
  c.epochs = 50;
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const Row& r : kTable) names.push_back(preset_name(r.dataset, r.method, r.arch));
  for (Method m : {Method::kBptt, Method::kEprop, Method::kDecolle})
    for (Architecture a : {Architecture::kFF, Architecture::kREC}) names.push_back(preset_name("synthetic", m, a));
  return names;
}

ExperimentConfig preset(std::string_view name) {
  for (const Row& r : kTable) {
    if (preset_name(r.dataset, r.method, r.arch) != name) continue;
    ExperimentConfig c;
    c.name = std::string(name);
    c.method = r.method;
    c.architecture = r.arch;
    c.task.kind = "manifest";
    const bool nmnist = std::string_view(r.dataset) == "nmnist";
    c.task.classes = nmnist ? 10 : 11;
    c.task.t_steps = nmnist ? 30 : 60;
    c.task.channels = nmnist ? 2 * 34 * 34 : 2 * 128 * 128;
    c.hidden = nmnist ? std::vector<Eigen::Index>{120, 84} : std::vector<Eigen::Index>{512};
    c.lif = {r.alpha_syn, r.alpha_mem, r.v_th, true};
    c.optimizer.kind = OptimizerKind::kAdam;
    c.optimizer.learning_rate = r.lr;
    c.optimizer.batch_size = r.batch;
    c.attacks.trigger_width = nmnist ? 34 : 128;  // top-left of the ON polarity map
    c.epochs = 100;
    return c;
  }
  for (Method m : {Method::kBptt, Method::kEprop, Method::kDecolle})
    for (Architecture a : {Architecture::kFF, Architecture::kREC})
      if (preset_name("synthetic", m, a) == name) return synthetic(m, a);

  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'; available: " + known);
}

}  // namespace snnbench
