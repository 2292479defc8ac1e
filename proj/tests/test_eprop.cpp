#include <doctest.h>

#include <random>

#include "snnbench/bptt.hpp"
#include "snnbench/data.hpp"
#include "snnbench/eprop.hpp"
#include "support/cases.hpp"

using namespace snnbench;
using namespace cases;

namespace {

LayerParams layer_with(Eigen::Index n_out, Eigen::Index n_in, double a_syn, double a_mem, bool recurrent = false) {
  LayerParams p;
  p.w = Matrix::Zero(n_out, n_in);
  p.lif = {a_syn, a_mem, 1.0, true};
  if (recurrent) p.v = Matrix::Zero(n_out, n_out);
  return p;
}


}  // namespace

TEST_CASE("eligibility_update: no input keeps eligibility at zero") {
  const LayerParams p = layer_with(3, 4, 0.9, 0.5);
  EligibilityState s = EligibilityState::zeros(p);
  for (int t = 0; t < 10; ++t) eligibility_update(s, Vector::Zero(4), Vector::Zero(3), p);
  CHECK(s.elig_vector.isZero());
  CHECK(eligibility_trace(s, Vector::Constant(3, 1.0), p, {}).isZero());
}

TEST_CASE("eligibility_update: degenerate decays are memoryless") {
  const LayerParams p = layer_with(2, 3, 0.0, 0.0);
  EligibilityState s = EligibilityState::zeros(p);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 8; ++t) {
    Vector x(3);
    for (Eigen::Index j = 0; j < 3; ++j) x[j] = static_cast<double>(rng() % 2);
    eligibility_update(s, x, Vector::Zero(2), p);
    for (Eigen::Index i = 0; i < 2; ++i) CHECK(s.elig_vector.row(i) == x.transpose());
  }
}

TEST_CASE("eligibility_update: single spike follows the double-filter convolution") {
  const LayerParams p = layer_with(1, 1, 0.9, 0.5);
  EligibilityState s = EligibilityState::zeros(p);
  oracle::Vec x(12, 0.0);
  x[0] = 1.0;
  const oracle::Vec ref = oracle::double_filter(x, 0.9, 0.5);
  CHECK(ref[1] == doctest::Approx(1.4));
  CHECK(ref[2] == doctest::Approx(1.51));
  for (std::size_t t = 0; t < x.size(); ++t) {
    eligibility_update(s, Vector::Constant(1, x[t]), Vector::Zero(1), p);
    CHECK(s.elig_vector(0, 0) == doctest::Approx(ref[t]).epsilon(1e-12));
  }
}

TEST_CASE("eligibility_update: recurrent eligibility filters the one-step-delayed own spikes") {
  LayerParams p = layer_with(3, 2, 0.5, 0.5, true);
  EligibilityState s = EligibilityState::zeros(p);
  Vector prev(3);
  prev << 1, 0, 1;
  eligibility_update(s, Vector::Zero(2), prev, p);
  CHECK(*s.filtered_rec == prev);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(s.elig_vector_rec->row(i) == prev.transpose());

  // Inside eprop_gradients: a neuron that fires only at the last step contributes nothing
  // to the recurrent eligibility, because its spike would only be seen one step later.
  Network net;
  LayerParams h = layer_with(2, 1, 0.5, 0.5, true);
  h.w << 0.0, 1.0;  // neuron 1 receives the input, neuron 0 does not
  h.lif.v_th = 0.5;
  LayerParams o = layer_with(2, 2, 0.5, 0.5);
  o.w = Matrix::Identity(2, 2);
  o.spiking = false;
  net.layers = {h, o};
  RowMatrix x(3, 1);
  x << 0, 0, 1;  // neuron 1 fires at t = 2 only
  FeedbackMatrices fb = make_feedback(net, FeedbackMode::kRandomFixed, 3);
  const GradientResult r = eprop_gradients(net, SpikeTensor(x), 0, fb, {});
  REQUIRE(r.grads.layers[0].dv.has_value());
  CHECK(r.grads.layers[0].dv->isZero());
  CHECK_THROWS_AS(eligibility_update(s, Vector::Zero(3), prev, p), std::invalid_argument);
}

TEST_CASE("learning_signal: zero, identity and random routing") {
  FeedbackMatrices fb;
  fb.g = {Matrix::Identity(4, 4), Matrix::Random(6, 4)};
  CHECK(learning_signal(Vector::Zero(4), fb, 1).isZero());
  Vector err(4);
  err << 0.3, -1.0, 0.25, 0.45;
  CHECK(learning_signal(err, fb, 0) == err);
  const Vector sig = learning_signal(err, fb, 1);
  for (Eigen::Index i = 0; i < 6; ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < 4; ++k) acc += fb.g[1](i, k) * err[k];
    CHECK(sig[i] == doctest::Approx(acc).epsilon(1e-14));
  }
  CHECK_THROWS(learning_signal(Vector::Zero(3), fb, 1));
  CHECK_THROWS(learning_signal(err, fb, 2));
}

TEST_CASE("make_feedback: random matrices are bounded and seeded; symmetric follows the weights") {
  NetworkConfig cfg;
  cfg.n_inputs = 5;
  cfg.hidden = {7, 6};
  cfg.n_classes = 4;
  const Network net = init_network(cfg, 1);
  const FeedbackMatrices a = make_feedback(net, FeedbackMode::kRandomFixed, 9);
  const FeedbackMatrices b = make_feedback(net, FeedbackMode::kRandomFixed, 9);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(a.g[l] == b.g[l]);
    CHECK(a.g[l].cwiseAbs().maxCoeff() <= 0.5);
  }
  const FeedbackMatrices s = make_feedback(net, FeedbackMode::kSymmetric, 0);
  CHECK(s.g[1].isApprox((net.layers[2].w).transpose()));
  CHECK(s.g[0].isApprox((net.layers[2].w * net.layers[1].w).transpose()));
}

TEST_CASE("property: single-layer e-prop equals BPTT") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 40; ++trial) {
    const oracle::Instance inst = single_layer_instance(rng, trial);
    const LossSpec loss{trial % 5 == 4 ? LossKind::kMeanSquared : LossKind::kSoftmaxCrossEntropy};
    const FeedbackMatrices fb = make_feedback(inst.net, FeedbackMode::kSymmetric, 0);
    for (SignalTiming timing : {SignalTiming::kPerStep, SignalTiming::kTerminal}) {
      const GradientResult e = eprop_gradients(inst.net, inst.input, inst.target, fb, loss, {timing});
      const BpttResult b = bptt_gradients(inst.net, inst.input, inst.target, loss);
      CHECK(max_relative(e.grads, b.grads) <= 1e-6);
      CHECK(e.loss == doctest::Approx(b.loss).epsilon(1e-12));
    }
  }
}

TEST_CASE("eprop: zero error yields zero gradients") {
  // Mean-squared loss with scores already equal to the one-hot target.
  Network net;
  LayerParams p = layer_with(2, 1, 0.5, 0.5);
  p.spiking = false;
  p.w << 1.0, 0.0;
  net.layers = {p};
  RowMatrix x(1, 1);
  x << 1.0;
  const FeedbackMatrices fb = make_feedback(net, FeedbackMode::kRandomFixed, 1);
  const GradientResult r = eprop_gradients(net, SpikeTensor(x), 0, fb, {LossKind::kMeanSquared});
  CHECK(r.loss == 0.0);
  CHECK(r.grads.squared_norm() == 0.0);
}

TEST_CASE("eprop: hidden gradient differs from BPTT on deep nets; memory independent of T") {
  NetworkConfig cfg;
  cfg.n_inputs = 12;
  cfg.hidden = {10};
  cfg.n_classes = 2;
  cfg.lif = {0.9, 0.8, 0.3, true};
  const Network net = init_network(cfg, 6);
  std::mt19937_64 rng(3);
  SpikeTensor x(20, 12);
  for (std::size_t t = 0; t < 20; ++t)
    for (std::size_t c = 0; c < 12; ++c) x(t, c) = rng() % 3 == 0;
  const FeedbackMatrices fb = make_feedback(net, FeedbackMode::kSymmetric, 0);
  const GradientResult e = eprop_gradients(net, x, 1, fb, {});
  const BpttResult b = bptt_gradients(net, x, 1, {});
  CHECK(e.grads.layers[1].dw.isApprox(b.grads.layers[1].dw, 1e-9));
  CHECK_FALSE(e.grads.layers[0].dw.isApprox(b.grads.layers[0].dw, 1e-6));

  const std::size_t m10 = eprop_gradients(net, x.head(10), 1, fb, {}).learning_state_peak;
  CHECK(m10 == e.learning_state_peak);
}

TEST_CASE("train_epoch_eprop: lr 0 leaves weights; first epochs reduce the loss") {
  NetworkConfig cfg;
  cfg.n_inputs = 64;
  cfg.hidden = {24};
  cfg.n_classes = 2;
  SynthSpec ss;
  ss.n_per_class = 20;
  const Dataset data = synth_pattern_dataset(ss);
  Network net = init_network(cfg, 2);
  const Network before = net;
  const FeedbackMatrices fb = make_feedback(net, FeedbackMode::kRandomFixed, 5);

  OptimizerSpec zero;
  zero.learning_rate = 0.0;
  Optimizer oz(zero);
  train_epoch_eprop(net, data, fb, oz, 1);
  for (std::size_t l = 0; l < net.layers.size(); ++l) CHECK(net.layers[l].w == before.layers[l].w);

  OptimizerSpec os;
  os.kind = OptimizerKind::kAdam;
  os.learning_rate = 5e-3;
  Optimizer opt(os);
  const double initial = evaluate(net, data).mean_loss;
  for (int e = 0; e < 3; ++e) train_epoch_eprop(net, data, fb, opt, 10 + e);
  CHECK(evaluate(net, data).mean_loss < initial);
}
