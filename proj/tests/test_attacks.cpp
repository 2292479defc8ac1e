#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "snnbench/attacks.hpp"
#include "snnbench/loss.hpp"
#include "snnbench/training.hpp"

using namespace snnbench;

namespace {

Network small_net(bool recurrent, std::uint64_t seed) {
  NetworkConfig cfg;
  cfg.n_inputs = 64;
  cfg.hidden = {24, 16};
  cfg.n_classes = 2;
  cfg.recurrent = recurrent;
  cfg.lif = {0.9, 0.8, 0.3, true};
  return init_network(cfg, seed);
}

Dataset small_data(std::size_t per_class = 20) {
  SynthSpec ss;
  ss.n_per_class = per_class;
  ss.jitter = 0.1;
  return synth_pattern_dataset(ss);
}

// Two channels read straight into two non-spiking class units.
Network two_channel_toy() {
  Network net;
  LayerParams p;
  p.w = Matrix::Identity(2, 2);
  p.spiking = false;
  net.layers = {p};
  return net;
}

SpikeTensor constant_input(std::size_t t_steps, double a, double b) {
  SpikeTensor x(t_steps, 2);
  for (std::size_t t = 0; t < t_steps; ++t) {
    x(t, 0) = a;
    x(t, 1) = b;
  }
  return x;
}

}  // namespace

TEST_CASE("counterpart: zero input gives zero rates") {
  const RateModel m = build_ann_counterpart(small_net(true, 1));
  CHECK(m.scores(Vector::Zero(64)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("counterpart: single rectified layer with positive drive equals the time-averaged drive") {
  Network net;
  LayerParams p;
  p.w.resize(3, 4);
  p.w << 0.2, 0.1, 0.5, 0.3,  //
      0.7, 0.0, 0.1, 0.4,     //
      0.05, 0.6, 0.2, 0.1;
  net.layers = {p};
  SpikeTensor x(5, 4);
  const double pattern[5][4] = {{1, 0, 1, 0}, {0, 1, 1, 0}, {1, 1, 0, 1}, {0, 0, 1, 1}, {1, 0, 0, 0}};
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c = 0; c < 4; ++c) x(t, c) = pattern[t][c];

  Vector drive = Vector::Zero(3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t c = 0; c < 4; ++c) drive[i] += p.w(i, static_cast<Eigen::Index>(c)) * pattern[t][c] / 5.0;

  const Vector r = build_ann_counterpart(net).scores(mean_intensity(x));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(r[i] == doctest::Approx(drive[i]).epsilon(1e-14));
}

TEST_CASE("counterpart: recurrent fold relu(Wx + V relu(Wx))") {
  Network net;
  LayerParams p;
  p.w = Matrix::Identity(2, 2);
  Matrix v(2, 2);
  v << 0.0, 0.5, -2.0, 0.0;
  p.v = v;
  net.layers = {p};
  Vector x(2);
  x << 0.4, 0.3;
  // z0 = (0.4, 0.3); fold adds (0.15, -0.8) -> relu(0.55, -0.5) = (0.55, 0)
  const Vector r = build_ann_counterpart(net).scores(x);
  CHECK(r[0] == doctest::Approx(0.55).epsilon(1e-14));
  CHECK(r[1] == 0.0);
}

TEST_CASE("counterpart: snapshot semantics") {
  Network net = small_net(false, 2);
  const RateModel m = build_ann_counterpart(net);
  const Vector x = Vector::Constant(64, 0.3);
  const Vector before = m.scores(x);
  net.layers[0].w *= -3.0;
  CHECK(m.scores(x) == before);
}

TEST_CASE("counterpart input gradient matches finite differences") {
  const RateModel m = build_ann_counterpart(small_net(true, 3));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.9);
  Vector x(64);
  for (auto& e : x) e = u(rng);
  const Vector g = m.input_gradient(x, 1);
  const double h = 1e-6;
  for (Eigen::Index c = 0; c < 64; c += 7) {
    Vector xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const double fd = (evaluate_loss({}, m.scores(xp), 1).value - evaluate_loss({}, m.scores(xm), 1).value) / (2 * h);
    CHECK(std::abs(fd - g[c]) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("fgsm: epsilon 0 is the identity and leaves accuracy bit-identical") {
  const Network net = small_net(false, 5);
  const Dataset data = small_data();
  for (FgsmMode mode : {FgsmMode::kAnnCounterpart, FgsmMode::kSurrogateDirect}) {
    for (const auto& s : data.samples) CHECK(fgsm_perturb(net, s.input, s.label, {0.0, mode}).data() == s.input.data());
    CHECK(fgsm_accuracy(net, data, {0.0, mode}) == evaluate(net, data).accuracy);
  }
}

TEST_CASE("property: fgsm stays within epsilon and the valid intensity range") {
  const Dataset data = small_data(6);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const Network net = small_net(trial % 2 == 1, 10 + static_cast<std::uint64_t>(trial));
    for (double eps : {1e-3, 0.1, 0.37, 1.0}) {
      for (FgsmMode mode : {FgsmMode::kAnnCounterpart, FgsmMode::kSurrogateDirect}) {
        for (const auto& s : data.samples) {
          // graded intensities so the eps step is rarely exact in binary
          SpikeTensor x = s.input;
          for (std::size_t t = 0; t < x.t_steps(); ++t)
            for (std::size_t c = 0; c < x.channels(); ++c) x(t, c) *= u(rng);
          const SpikeTensor y = fgsm_perturb(net, x, s.label, {eps, mode});
          CHECK((y.data() - x.data()).cwiseAbs().maxCoeff() <= eps);
          CHECK(y.data().minCoeff() >= 0.0);
          CHECK(y.data().maxCoeff() <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("fgsm: counterpart mode adds one sign step at every timestep") {
  const Network net = small_net(false, 7);
  const Dataset data = small_data(2);
  const auto& s = data.samples[0];
  SpikeTensor x = s.input;
  for (std::size_t t = 0; t < x.t_steps(); ++t)
    for (std::size_t c = 0; c < x.channels(); ++c) x(t, c) = 0.5;
  const SpikeTensor y = fgsm_perturb(net, x, s.label, {0.01});
  for (std::size_t t = 1; t < y.t_steps(); ++t) CHECK(y.data().row(static_cast<Eigen::Index>(t)) == y.data().row(0));
  for (std::size_t c = 0; c < y.channels(); ++c) CHECK(std::abs(std::abs(y(0, c) - 0.5) - 0.01) <= 1e-15);
}

TEST_CASE("fgsm: epsilon = max intensity flips a hand-built 1D decision") {
  const Network net = two_channel_toy();
  // class 0 wins by 0.6 vs 0.4 per step
  const SpikeTensor x = constant_input(4, 0.6, 0.4);
  REQUIRE(predict(forward(net, x).scores) == 0);
  // d CE / d x0 < 0, d CE / d x1 > 0: step moves x0 -> 0 and x1 -> 1
  const SpikeTensor y = fgsm_perturb(net, x, 0, {1.0});
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(y(t, 0) == 0.0);
    CHECK(y(t, 1) == 1.0);
  }
  CHECK(predict(forward(net, y).scores) == 1);
  // a small step does not flip it
  CHECK(predict(forward(net, fgsm_perturb(net, x, 0, {0.05})).scores) == 0);
}

TEST_CASE("fgsm: zero weight matrix means no gradient path") {
  Network net = small_net(false, 8);
  net.layers[1].w.setZero();
  const Dataset data = small_data(1);
  const auto& s = data.samples[0];
  CHECK_THROWS_AS(fgsm_perturb(net, s.input, s.label, {0.01}), MissingGradientPath);
  CHECK_THROWS_AS(fgsm_perturb(net, s.input, s.label, {0.01, FgsmMode::kSurrogateDirect}), MissingGradientPath);
  CHECK_THROWS_AS(fgsm_perturb(net, s.input, s.label, {-0.1}), std::invalid_argument);
  CHECK(fgsm_mode_from_string(to_string(FgsmMode::kSurrogateDirect)) == FgsmMode::kSurrogateDirect);
}

TEST_CASE("trigger: geometry, 4T nonzeros, idempotent, others untouched") {
  const TriggerSpec trig = default_trigger(64);
  CHECK(trig.channels == std::array<std::size_t, 4>{0, 1, 8, 9});
  CHECK(default_trigger(2 * 34 * 34).channels == std::array<std::size_t, 4>{0, 1, 48, 49});
  CHECK(default_trigger(2312, 34).channels == std::array<std::size_t, 4>{0, 1, 34, 35});

  const SpikeTensor zero(20, 64);
  const SpikeTensor z = apply_trigger(zero, trig);
  CHECK((z.data().array() != 0.0).count() == 4 * 20);

  const Dataset data = small_data(3);
  for (const auto& s : data.samples) {
    const SpikeTensor once = apply_trigger(s.input, trig);
    CHECK(apply_trigger(once, trig).data() == once.data());
    for (std::size_t c = 0; c < 64; ++c) {
      const bool hit = c == 0 || c == 1 || c == 8 || c == 9;
      for (std::size_t t = 0; t < 20; ++t) {
        if (hit)
          CHECK(once(t, c) == 1.0);
        else
          CHECK(once(t, c) == s.input(t, c));
      }
    }
  }

  TriggerSpec bad = trig;
  bad.channels[3] = 64;
  CHECK_THROWS_AS(apply_trigger(zero, bad), std::out_of_range);
}

TEST_CASE("poison: rate 0, rate 1, exact counts, reproducible by seed") {
  SynthSpec ss;
  ss.n_per_class = 100;
  const Dataset data = synth_pattern_dataset(ss);
  PoisonPlan plan;
  plan.source = 0;
  plan.target = 1;
  plan.trigger = default_trigger(64);
  plan.seed = 3;

  plan.rate = 0.0;
  const Dataset same = poison_dataset(data, plan);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(same.samples[i].input.data() == data.samples[i].input.data());
    CHECK(same.samples[i].label == data.samples[i].label);
  }

  plan.rate = 1.0;
  const Dataset all = poison_dataset(data, plan);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.samples[i].label == 0) {
      CHECK(all.samples[i].label == 1);
      CHECK(all.samples[i].input.data() == apply_trigger(data.samples[i].input, plan.trigger).data());
    } else {
      CHECK(all.samples[i].input.data() == data.samples[i].input.data());
    }
  }

  plan.rate = 0.5;
  const auto idx = poisoned_indices(data, plan);
  CHECK(idx.size() == 50);
  CHECK(poisoned_indices(data, plan) == idx);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 50);
  for (std::size_t i : idx) CHECK(data.samples[i].label == 0);
  const Dataset half = poison_dataset(data, plan);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (half.samples[i].label != data.samples[i].label) ++changed;
  CHECK(changed == 50);
  plan.seed = 4;
  CHECK(poisoned_indices(data, plan) != idx);

  for (double r : {0.0, 0.01, 0.29, 0.3, 0.57, 0.9, 0.999, 1.0})
    CHECK(poison_count(r, 100) == static_cast<std::size_t>(std::floor(r * 100 + 1e-9)));
  CHECK(poison_count(0.29, 100) == 29);
  CHECK(poison_count(0.5, 7) == 3);

  Dataset no_source = data;
  no_source.samples.erase(std::remove_if(no_source.samples.begin(), no_source.samples.end(),
                                         [](const Sample& s) { return s.label == 0; }),
                          no_source.samples.end());
  CHECK_THROWS(poison_dataset(no_source, plan));
  plan.target = 0;
  CHECK_THROWS(poison_dataset(data, plan));
}

TEST_CASE("asr: bounded, disjoint views, errors") {
  const Network net = small_net(false, 9);
  const Dataset data = small_data(15);
  PoisonPlan plan;
  plan.trigger = default_trigger(64);
  const AsrResult r = attack_success_rate(net, data, plan);
  CHECK(r.asr >= 0.0);
  CHECK(r.asr <= 1.0);
  CHECK(r.source_samples == 15);
  CHECK(r.clean_accuracy == evaluate(net, data).accuracy);

  Dataset only_target = data;
  for (auto& s : only_target.samples) s.label = 1;
  CHECK_THROWS(attack_success_rate(net, only_target, plan));
}

TEST_CASE("draw_source_targets: distinct pairs, deterministic") {
  const auto a = draw_source_targets(10, 50, 1);
  CHECK(a.size() == 50);
  for (auto [s, t] : a) {
    CHECK(s != t);
    CHECK(s >= 0);
    CHECK(t < 10);
  }
  CHECK(draw_source_targets(10, 50, 1) == a);
  CHECK(draw_source_targets(2, 5, 0).front().first != draw_source_targets(2, 5, 0).front().second);
}

TEST_CASE("robustness_cka_delta: zero at epsilon 0, small for untrained nets") {
  const Network ff = small_net(false, 11), rec = small_net(true, 11);
  const Dataset data = small_data(30);
  const Matrix d0 = robustness_cka_delta(ff, rec, data, {0.0});
  REQUIRE(d0.rows() == 3);
  for (Eigen::Index l = 0; l < 3; ++l) CHECK(std::abs(d0(l, 0)) <= 1e-9);

  const Matrix d = robustness_cka_delta(ff, rec, data, {0.001, 0.005});
  for (Eigen::Index i = 0; i < d.size(); ++i) CHECK(std::abs(d.data()[i]) <= 0.1);

  const Matrix c = clean_adversarial_cka(ff, data, {0.0, 0.05});
  for (Eigen::Index l = 0; l < 3; ++l) CHECK(c(l, 0) == doctest::Approx(1.0).epsilon(1e-9));
}
