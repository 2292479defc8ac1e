#include "snnbench/lif.hpp"

#include <cmath>
#include <stdexcept>

namespace snnbench {

void LifParams::validate() const {
  if (!(alpha_syn > 0.0 && alpha_syn <= 1.0))
    throw std::invalid_argument("LifParams: alpha_syn must lie in (0, 1]");
  if (!(alpha_mem > 0.0 && alpha_mem <= 1.0))
    throw std::invalid_argument("LifParams: alpha_mem must lie in (0, 1]");
  if (!(v_th > 0.0) || !std::isfinite(v_th))
    throw std::invalid_argument("LifParams: v_th must be positive");
}

void SurrogateSpec::validate() const {
  if (!(slope > 0.0) || !std::isfinite(slope))
    throw std::invalid_argument("SurrogateSpec: slope must be positive");
}

std::string_view to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::kFastSigmoid: return "fast-sigmoid";
    case SurrogateKind::kRectangular: return "rectangular";
    case SurrogateKind::kSigmoidSoft: return "sigmoid-soft";
  }
  return "unknown";
}

SurrogateKind surrogate_kind_from_string(std::string_view name) {
  if (name == "fast-sigmoid") return SurrogateKind::kFastSigmoid;
  if (name == "rectangular") return SurrogateKind::kRectangular;
  if (name == "sigmoid-soft") return SurrogateKind::kSigmoidSoft;
  throw std::invalid_argument("unknown surrogate kind: " + std::string(name));
}

namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double surrogate_grad(double u, const SurrogateSpec& spec, double v_th) {
  const double x = u - v_th;
  switch (spec.kind) {
    case SurrogateKind::kFastSigmoid: {
      const double d = 1.0 + spec.slope * std::abs(x);
      return 1.0 / (d * d);
    }
    case SurrogateKind::kRectangular:
      // Unit-area box of width 1/slope.
      return std::abs(x) < 0.5 / spec.slope ? spec.slope : 0.0;
    case SurrogateKind::kSigmoidSoft: {
      const double s = logistic(spec.slope * x);
      return spec.slope * s * (1.0 - s);
    }
  }
  return 0.0;
}

double spike_value(double u, double v_th, SpikeMode mode, double slope) {
  if (mode == SpikeMode::kHard) return u > v_th ? 1.0 : 0.0;
  return logistic((u - v_th) * slope);
}

double spike_derivative(double u, double v_th, SpikeMode mode, const SurrogateSpec& surrogate) {
  if (mode == SpikeMode::kHard) return surrogate_grad(u, surrogate, v_th);
  const double s = logistic((u - v_th) * surrogate.slope);
  return surrogate.slope * s * (1.0 - s);
}

void LayerParams::validate() const {
  lif.validate();
  if (w.rows() == 0 || w.cols() == 0) throw std::invalid_argument("LayerParams: empty weight matrix");
  if (!w.allFinite()) throw std::invalid_argument("LayerParams: non-finite weight");
  if (v) {
    if (v->rows() != w.rows() || v->cols() != w.rows())
      throw std::invalid_argument("LayerParams: recurrent matrix must be [n_out x n_out]");
    if (!v->allFinite()) throw std::invalid_argument("LayerParams: non-finite recurrent weight");
    if (!spiking) throw std::invalid_argument("LayerParams: a non-spiking layer cannot be recurrent");
  }
}

LayerState LayerState::zeros(Eigen::Index n) {
  return LayerState{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
}

LayerState lif_step(const LayerState& prev, const LayerParams& params,
                    const Eigen::Ref<const Vector>& input, SpikeMode mode, double soft_slope) {
  const Eigen::Index n = params.n_out();
  if (input.size() != params.n_in())
    throw std::invalid_argument("lif_step: input size does not match n_in");
  if (prev.current.size() != n || prev.potential.size() != n || prev.spikes.size() != n)
    throw std::invalid_argument("lif_step: state size does not match n_out");
  if (!input.allFinite()) throw std::invalid_argument("lif_step: non-finite input");

  const LifParams& lif = params.lif;
  LayerState next;
  next.current = lif.alpha_syn * prev.current + params.w * input;
  if (params.v) next.current.noalias() += *params.v * prev.spikes;
  next.potential = lif.alpha_mem * prev.potential + next.current;
  if (params.spiking && lif.refractory_subtract) next.potential -= lif.v_th * prev.spikes;

  next.spikes = Vector::Zero(n);
  if (params.spiking) {
    for (Eigen::Index i = 0; i < n; ++i)
      next.spikes[i] = spike_value(next.potential[i], lif.v_th, mode, soft_slope);
  }
  return next;
}

}  // namespace snnbench
