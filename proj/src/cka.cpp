#include "snnbench/cka.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace snnbench {

Matrix gram_linear(const RepresentationBlock& rep) {
  if (!rep.allFinite()) throw std::invalid_argument("gram_linear: non-finite representation");
  return rep * rep.transpose();
}

namespace {

void check_pair(const Matrix& k, const Matrix& l, Eigen::Index min_b, const char* who) {
  if (k.rows() != k.cols() || l.rows() != l.cols() || k.rows() != l.rows())
    throw std::invalid_argument(std::string(who) + ": Gram matrices must be square with equal b");
  if (k.rows() < min_b)
    throw std::invalid_argument(std::string(who) + ": need b >= " + std::to_string(min_b));
}

Matrix centered(const Matrix& k) {
  const Vector col_mean = k.colwise().mean().transpose();
  const Vector row_mean = k.rowwise().mean();
  const double mean = k.mean();
  Matrix c = k;
  c.colwise() -= row_mean;
  c.rowwise() -= col_mean.transpose();
  c.array() += mean;
  return c;
}

}  // namespace

double hsic_biased(const Matrix& k, const Matrix& l) {
  check_pair(k, l, 2, "hsic_biased");
  const double b = static_cast<double>(k.rows());
  // tr(KCLC) = sum_ij (CKC)_ij L_ij since C is symmetric and idempotent.
  return (centered(k).cwiseProduct(l)).sum() / ((b - 1.0) * (b - 1.0));
}

double hsic_unbiased(const Matrix& k, const Matrix& l) {
  check_pair(k, l, 4, "hsic_unbiased");
  const double n = static_cast<double>(k.rows());
  Matrix kt = k, lt = l;
  kt.diagonal().setZero();
  lt.diagonal().setZero();
  const Vector k1 = kt.rowwise().sum(), l1 = lt.rowwise().sum();
  const double trace = kt.cwiseProduct(lt).sum();  // tr(K~ L~), both symmetric
  const double sums = k1.sum() * l1.sum() / ((n - 1.0) * (n - 2.0));
  const double cross = 2.0 / (n - 2.0) * k1.dot(l1);
  return (trace + sums - cross) / (n * (n - 3.0));
}

std::string_view to_string(HsicEstimator estimator) {
  return estimator == HsicEstimator::kBiased ? "biased" : "unbiased";
}

HsicEstimator hsic_estimator_from_string(std::string_view name) {
  if (name == "biased") return HsicEstimator::kBiased;
  if (name == "unbiased") return HsicEstimator::kUnbiased;
  throw std::invalid_argument("unknown HSIC estimator: " + std::string(name));
}

namespace {

double ratio(double kl, double kk, double ll) {
  if (!(kk > 0.0) || !(ll > 0.0))
    throw std::domain_error("cka: self-similarity HSIC is not positive (constant representation?)");
  return kl / std::sqrt(kk * ll);
}

}  // namespace

double cka(const RepresentationBlock& a, const RepresentationBlock& b, HsicEstimator estimator) {
  if (a.rows() != b.rows()) throw std::invalid_argument("cka: representations differ in batch size");
  const Matrix k = gram_linear(a), l = gram_linear(b);
  auto hsic = estimator == HsicEstimator::kBiased ? hsic_biased : hsic_unbiased;
  return ratio(hsic(k, l), hsic(k, k), hsic(l, l));
}

void CkaAccumulator::add(const RepresentationBlock& a, const RepresentationBlock& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("CkaAccumulator: representations differ in batch size");
  add_grams(gram_linear(a), gram_linear(b));
}

void CkaAccumulator::add_grams(const Matrix& k, const Matrix& l) {
  if (batches_ > 0 && k.rows() != b_) throw std::invalid_argument("CkaAccumulator: batches must share b");
  kl_ += hsic_unbiased(k, l);
  kk_ += hsic_unbiased(k, k);
  ll_ += hsic_unbiased(l, l);
  b_ = k.rows();
  ++batches_;
}

double CkaAccumulator::value() const {
  if (batches_ == 0) throw std::logic_error("CkaAccumulator: no batches");
  const double n = static_cast<double>(batches_);
  return ratio(kl_ / n, kk_ / n, ll_ / n);
}

std::string_view to_string(RepresentationSource source) {
  return source == RepresentationSource::kSpikes ? "spikes" : "potentials";
}

RepresentationSource representation_source_from_string(std::string_view name) {
  if (name == "spikes") return RepresentationSource::kSpikes;
  if (name == "potentials") return RepresentationSource::kPotentials;
  throw std::invalid_argument("unknown representation source: " + std::string(name));
}

std::vector<RepresentationBlock> layer_representations(const Network& net, const std::vector<SpikeTensor>& inputs,
                                                       RepresentationSource source) {
  std::vector<RepresentationBlock> blocks;
  if (inputs.empty()) return blocks;
  const auto b = static_cast<Eigen::Index>(inputs.size());
  const auto T = static_cast<Eigen::Index>(inputs.front().t_steps());
  for (const auto& layer : net.layers) blocks.emplace_back(b, T * layer.n_out());
  for (Eigen::Index r = 0; r < b; ++r) {
    const SpikeTensor& x = inputs[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(x.t_steps()) != T)
      throw std::invalid_argument("layer_representations: inputs differ in T");
    const ForwardResult fr = forward(net, x, {true});
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const bool spikes = source == RepresentationSource::kSpikes && net.layers[l].spiking;
      const RowMatrix& m = spikes ? fr.traces[l].spikes : fr.traces[l].potential;
      // Row-major storage makes the flat view t-major.
      blocks[l].row(r) = Eigen::Map<const Eigen::RowVectorXd>(m.data(), m.size());
    }
  }
  return blocks;
}

std::vector<RepresentationBlock> layer_representations(const Network& net, const Dataset& data,
                                                       std::size_t first, std::size_t count,
                                                       RepresentationSource source) {
  if (first + count > data.size()) throw std::out_of_range("layer_representations: range exceeds dataset");
  std::vector<SpikeTensor> inputs;
  inputs.reserve(count);
  for (std::size_t i = first; i < first + count; ++i) inputs.push_back(data.samples[i].input);
  return layer_representations(net, inputs, source);
}

Matrix cka_matrix(const Network& a, const Network& b, const Dataset& data, const CkaOptions& options) {
  const std::size_t total = std::min(options.total, data.size());
  std::size_t batch = std::min(options.batch_size, total);
  if (batch < 4) throw std::invalid_argument("cka_matrix: need at least 4 samples per batch");
  const std::size_t n_batches = total / batch;
  std::vector<std::vector<CkaAccumulator>> acc(a.size(), std::vector<CkaAccumulator>(b.size()));
  for (std::size_t k = 0; k < n_batches; ++k) {
    const auto ra = layer_representations(a, data, k * batch, batch, options.source);
    const auto rb = layer_representations(b, data, k * batch, batch, options.source);
    std::vector<Matrix> ka, kb;
    for (const auto& r : ra) ka.push_back(gram_linear(r));
    for (const auto& r : rb) kb.push_back(gram_linear(r));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) acc[i][j].add_grams(ka[i], kb[j]);
  }
  Matrix out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      double v = std::nan("");
      try {
        v = acc[i][j].value();
      } catch (const std::domain_error&) {
        // silent layer: similarity undefined, reported as NaN
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  return out;
}

}  // namespace snnbench
