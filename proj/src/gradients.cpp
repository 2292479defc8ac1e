#include "snnbench/gradients.hpp"

#include <stdexcept>

namespace snnbench {

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  g.layers.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    LayerGradient lg;
    lg.dw = Matrix::Zero(layer.w.rows(), layer.w.cols());
    if (layer.v) lg.dv = Matrix::Zero(layer.v->rows(), layer.v->cols());
    g.layers.push_back(std::move(lg));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.layers.size() != layers.size()) throw std::invalid_argument("Gradients: shape mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].dw += other.layers[l].dw;
    if (layers[l].dv.has_value() != other.layers[l].dv.has_value())
      throw std::invalid_argument("Gradients: recurrent shape mismatch");
    if (layers[l].dv) *layers[l].dv += *other.layers[l].dv;
  }
  return *this;
}

Gradients& Gradients::operator*=(double factor) {
  for (auto& lg : layers) {
    lg.dw *= factor;
    if (lg.dv) *lg.dv *= factor;
  }
  return *this;
}

bool Gradients::all_finite() const {
  for (const auto& lg : layers) {
    if (!lg.dw.allFinite()) return false;
    if (lg.dv && !lg.dv->allFinite()) return false;
  }
  return true;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& lg : layers) {
    s += lg.dw.squaredNorm();
    if (lg.dv) s += lg.dv->squaredNorm();
  }
  return s;
}

std::size_t Gradients::size() const {
  std::size_t n = 0;
  for (const auto& lg : layers) {
    n += static_cast<std::size_t>(lg.dw.size());
    if (lg.dv) n += static_cast<std::size_t>(lg.dv->size());
  }
  return n;
}

Vector Gradients::flatten() const {
  Vector out(static_cast<Eigen::Index>(size()));
  Eigen::Index k = 0;
  for (const auto& lg : layers) {
    out.segment(k, lg.dw.size()) = lg.dw.reshaped();
    k += lg.dw.size();
    if (lg.dv) {
      out.segment(k, lg.dv->size()) = lg.dv->reshaped();
      k += lg.dv->size();
    }
  }
  return out;
}

}  // namespace snnbench
