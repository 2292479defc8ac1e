#include <doctest.h>

#include <random>

#include "snnbench/data.hpp"
#include "snnbench/decolle.hpp"
#include "support/cases.hpp"

using namespace snnbench;
using namespace cases;

TEST_CASE("local_readout: zero, identity, random") {
  LocalReadout r{Matrix::Random(3, 4)};
  CHECK(local_readout(Vector::Zero(4), r).isZero());
  Vector s(4);
  s << 1, 0, 1, 1;
  CHECK(local_readout(s, LocalReadout{Matrix::Identity(4, 4)}) == s);
  const Vector y = local_readout(s, r);
  for (Eigen::Index k = 0; k < 3; ++k) CHECK(y[k] == doctest::Approx(r.g(k, 0) + r.g(k, 2) + r.g(k, 3)).epsilon(1e-14));
  CHECK_THROWS(local_readout(Vector::Zero(3), r));
}

TEST_CASE("trace_update: silent, memoryless, and double-filter sequences") {
  const LifParams lif{0.9, 0.5, 1.0, true};
  PresynapticTrace tr = PresynapticTrace::zeros(2);
  for (int t = 0; t < 5; ++t) tr = trace_update(tr, Vector::Zero(2), lif);
  CHECK(tr.p.isZero());

  const LifParams none{0.0, 0.0, 1.0, true};
  tr = PresynapticTrace::zeros(2);
  Vector v(2);
  v << 1, 0;
  tr = trace_update(tr, v, none);
  v << 0, 1;
  tr = trace_update(tr, v, none);
  CHECK(tr.p == v);

  oracle::Vec x(10, 0.0);
  x[0] = 1.0;
  const oracle::Vec ref = oracle::double_filter(x, 0.9, 0.5);
  tr = PresynapticTrace::zeros(1);
  for (std::size_t t = 0; t < x.size(); ++t) {
    tr = trace_update(tr, Vector::Constant(1, x[t]), lif);
    CHECK(tr.p[0] == doctest::Approx(ref[t]).epsilon(1e-12));
  }
}

TEST_CASE("decolle_step_update: direct formula cases") {
  LayerParams layer;
  layer.w = Matrix::Zero(1, 1);
  layer.lif = {0.5, 0.5, 1.0, true};
  LayerState st = LayerState::zeros(1);
  st.potential[0] = 1.0;  // fast-sigmoid derivative is 1 at threshold
  const PresynapticTrace tr{Vector::Constant(1, 0.5), Vector::Constant(1, 0.5)};
  // Mean-squared local loss with y = g s = 0 and g = -1: err = g * (y - 1) = 1.
  const LayerDelta d = decolle_step_update(layer, st, tr, std::nullopt, LocalReadout{Matrix::Constant(1, 1, -1.0)}, 0,
                                           {LossKind::kMeanSquared}, {SurrogateKind::kFastSigmoid, 10.0}, 0.1);
  CHECK(d.dw(0, 0) == doctest::Approx(-0.1 * 0.5));

  // y equals the one-hot target: zero delta.
  LayerParams two;
  two.w = Matrix::Zero(2, 3);
  LayerState s2 = LayerState::zeros(2);
  s2.spikes << 0, 1;
  s2.potential << 1.2, 1.3;
  const PresynapticTrace tr3{Vector::Ones(3), Vector::Ones(3)};
  const LayerDelta z = decolle_step_update(two, s2, tr3, std::nullopt, LocalReadout{Matrix::Identity(2, 2)}, 1,
                                           {LossKind::kMeanSquared}, {}, 1.0);
  CHECK(z.dw.isZero());
  CHECK_THROWS(decolle_step_update(two, s2, tr, std::nullopt, LocalReadout{Matrix::Identity(2, 2)}, 1, {}, {}, 1.0));
}

TEST_CASE("property: decolle gradients match the naive local-rule evaluation") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const DecolleCase c = random_decolle_case(rng, trial % 2 == 1);
    const GradientResult r = decolle_gradients(c.net, c.input, c.target, c.readouts);
    const auto ref = naive_decolle(c.net, c.input, c.readouts, c.target);
    for (std::size_t l = 0; l < ref.size(); ++l) {
      CHECK((r.grads.layers[l].dw - ref[l].first).cwiseAbs().maxCoeff() <= 1e-12);
      if (ref[l].second) CHECK((*r.grads.layers[l].dv - *ref[l].second).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("property: layer gradients ignore downstream weights") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const DecolleCase c = random_decolle_case(rng, trial % 2 == 0);
    Network perturbed = c.net;
    perturbed.layers[1].w = Matrix::Random(perturbed.layers[1].w.rows(), perturbed.layers[1].w.cols());
    const GradientResult a = decolle_gradients(c.net, c.input, c.target, c.readouts);
    const GradientResult b = decolle_gradients(perturbed, c.input, c.target, c.readouts);
    CHECK(a.grads.layers[0].dw == b.grads.layers[0].dw);
  }
}

TEST_CASE("decolle: learning state is constant in T") {
  std::mt19937_64 rng(1);
  const DecolleCase c = random_decolle_case(rng, true);
  const SpikeTensor longer(c.input.t_steps() * 4, c.input.channels());
  CHECK(decolle_gradients(c.net, c.input, 0, c.readouts).learning_state_peak ==
        decolle_gradients(c.net, longer, 0, c.readouts).learning_state_peak);
}

TEST_CASE("train_epoch_decolle: lr 0 keeps weights; readouts never change; deterministic") {
  NetworkConfig cfg;
  cfg.n_inputs = 64;
  cfg.hidden = {20, 10};
  cfg.n_classes = 2;
  cfg.class_layer = false;
  SynthSpec ss;
  ss.n_per_class = 10;
  const Dataset data = synth_pattern_dataset(ss);

  Network net = init_network(cfg, 4);
  const DecolleReadouts ro = make_decolle_readouts(net, 2, 8);
  const DecolleReadouts ro_copy = ro;
  const Network before = net;
  OptimizerSpec zero;
  zero.learning_rate = 0.0;
  Optimizer oz(zero);
  train_epoch_decolle(net, data, ro, oz, 1);
  for (std::size_t l = 0; l < net.layers.size(); ++l) CHECK(net.layers[l].w == before.layers[l].w);

  for (UpdateCadence cadence : {UpdateCadence::kOnline, UpdateCadence::kSequence}) {
    OptimizerSpec os;
    os.learning_rate = 1e-2;
    Network a = before, b = before;
    Optimizer oa(os), ob(os);
    train_epoch_decolle(a, data, ro, oa, 3, {}, {cadence});
    train_epoch_decolle(b, data, ro, ob, 3, {}, {cadence});
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
      CHECK(a.layers[l].w == b.layers[l].w);
      CHECK(a.layers[l].w != before.layers[l].w);
    }
    CHECK(*a.score_readout == ro.layers.back().g);
  }
  for (std::size_t l = 0; l < ro.layers.size(); ++l) CHECK(ro.layers[l].g == ro_copy.layers[l].g);
}
