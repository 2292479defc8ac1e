#include "snnbench/probe.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "snnbench/bptt.hpp"
#include "snnbench/format.hpp"

namespace snnbench {

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log_log_slope: need >= 2 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nan("");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ProbeTable complexity_probe(Method method, const std::vector<Eigen::Index>& hidden_sizes,
                            const std::vector<std::size_t>& t_steps, const ProbeOptions& options) {
  if (hidden_sizes.size() < 3 || t_steps.size() < 3)
    throw std::invalid_argument("complexity_probe: sweeps need at least 3 points each");
  for (auto n : hidden_sizes)
    if (n <= 0) throw std::invalid_argument("complexity_probe: hidden sizes must be positive");
  for (auto t : t_steps)
    if (t == 0) throw std::invalid_argument("complexity_probe: T must be positive");

  ProbeTable table;
  table.method = method;
  std::mt19937_64 rng(options.seed);
  std::bernoulli_distribution spike(0.2);
  for (Eigen::Index n : hidden_sizes) {
    NetworkConfig cfg;
    cfg.n_inputs = options.n_inputs;
    cfg.hidden = {n};
    cfg.n_classes = options.n_classes;
    cfg.recurrent = options.architecture == Architecture::kREC;
    cfg.class_layer = method != Method::kDecolle;
    cfg.lif = {0.9, 0.8, 0.5, true};
    Network net = init_network(cfg, options.seed);
    GradientFn grad;
    switch (method) {
      case Method::kBptt: grad = bptt_gradient_fn(); break;
      case Method::kEprop: grad = eprop_gradient_fn(make_feedback(net, FeedbackMode::kRandomFixed, options.seed)); break;
      case Method::kDecolle: grad = decolle_gradient_fn(make_decolle_readouts(net, options.n_classes, options.seed)); break;
    }
    for (std::size_t t : t_steps) {
      SpikeTensor x(t, static_cast<std::size_t>(options.n_inputs));
      for (std::size_t s = 0; s < t; ++s)
        for (std::size_t c = 0; c < x.channels(); ++c) x(s, c) = spike(rng) ? 1.0 : 0.0;
      ProbeRow row;
      row.n_hidden = n;
      row.t_steps = t;
      const auto start = std::chrono::steady_clock::now();
      for (std::size_t k = 0; k < std::max<std::size_t>(1, options.repeats); ++k)
        row.learning_state_peak = grad(net, x, 0).learning_state_peak;
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      row.seconds_per_step = secs / static_cast<double>(std::max<std::size_t>(1, options.repeats) * t);
      table.rows.push_back(row);
    }
  }

  std::vector<double> ts, mem_t, time_t, ns, mem_n;
  for (const auto& r : table.rows) {
    if (r.n_hidden == hidden_sizes.front()) {
      ts.push_back(static_cast<double>(r.t_steps));
      mem_t.push_back(static_cast<double>(r.learning_state_peak));
      time_t.push_back(r.seconds_per_step * static_cast<double>(r.t_steps));
    }
    if (r.t_steps == t_steps.front()) {
      ns.push_back(static_cast<double>(r.n_hidden));
      mem_n.push_back(static_cast<double>(r.learning_state_peak));
    }
  }
  table.memory_slope_t = log_log_slope(ts, mem_t);
  table.time_slope_t = log_log_slope(ts, time_t);
  table.memory_slope_n = log_log_slope(ns, mem_n);
  return table;
}

std::string probe_csv(const ProbeTable& table) {
  std::ostringstream o;
  o << "method,n_hidden,t_steps,learning_state_peak,seconds_per_step\n";
  for (const auto& r : table.rows)
    o << to_string(table.method) << "," << r.n_hidden << "," << r.t_steps << "," << r.learning_state_peak << ","
      << format_double(r.seconds_per_step) << "\n";
  return o.str();
}

}  // namespace snnbench
