#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnbench/config.hpp"

namespace snnbench {

struct ProbeRow {
  Eigen::Index n_hidden = 0;
  std::size_t t_steps = 0;
  std::size_t learning_state_peak = 0;  // counted elements, see MemoryMeter
  double seconds_per_step = 0.0;        // gradient time / T, wall clock
};

struct ProbeOptions {
  Eigen::Index n_inputs = 64;
  Eigen::Index n_classes = 2;
  Architecture architecture = Architecture::kFF;
  std::size_t repeats = 3;  // gradient evaluations per grid point for timing
  std::uint64_t seed = 1;
};

struct ProbeTable {
  Method method = Method::kBptt;
  std::vector<ProbeRow> rows;  // full grid, sizes outer, T inner
  // Least-squares slopes of log(peak) and log(time per sample) against log(T) at
  // the first hidden size, and of log(peak) against log(N) at the first T.
  double memory_slope_t = 0.0;
  double memory_slope_n = 0.0;
  double time_slope_t = 0.0;
};

// One hidden layer of each size, Bernoulli(0.2) inputs. Needs >= 3 points per sweep.
ProbeTable complexity_probe(Method method, const std::vector<Eigen::Index>& hidden_sizes,
                            const std::vector<std::size_t>& t_steps, const ProbeOptions& options = {});

// Slope of the least-squares line through (log x, log y); NaN if any y <= 0.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string probe_csv(const ProbeTable& table);

}  // namespace snnbench
