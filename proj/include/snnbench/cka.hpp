#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "snnbench/data.hpp"
#include "snnbench/network.hpp"

namespace snnbench {

// Rows are examples; a layer's activity over all timesteps concatenated t-major.
using RepresentationBlock = Matrix;

Matrix gram_linear(const RepresentationBlock& rep);

// tr(K C L C) / (b - 1)^2 with C the centering matrix. Requires b >= 2.
double hsic_biased(const Matrix& k, const Matrix& l);

// U-statistic estimator on Gram matrices with zeroed diagonals. Requires b >= 4.
double hsic_unbiased(const Matrix& k, const Matrix& l);

enum class HsicEstimator { kBiased, kUnbiased };

std::string_view to_string(HsicEstimator estimator);
HsicEstimator hsic_estimator_from_string(std::string_view name);

// Throws std::domain_error when either self-similarity term is not positive
// (e.g. a constant representation), instead of returning a misleading value.
double cka(const RepresentationBlock& a, const RepresentationBlock& b,
           HsicEstimator estimator = HsicEstimator::kUnbiased);

// Averages the three unbiased HSIC terms over minibatches before forming the ratio.
class CkaAccumulator {
 public:
  void add(const RepresentationBlock& a, const RepresentationBlock& b);
  void add_grams(const Matrix& k, const Matrix& l);
  std::size_t batches() const { return batches_; }
  double value() const;

 private:
  double kl_ = 0.0, kk_ = 0.0, ll_ = 0.0;
  std::size_t batches_ = 0;
  Eigen::Index b_ = 0;
};

enum class RepresentationSource { kSpikes, kPotentials };

std::string_view to_string(RepresentationSource source);
RepresentationSource representation_source_from_string(std::string_view name);

// One block per layer for samples [first, first + count). With kSpikes a
// non-spiking layer contributes its potentials, since it has no spike train.
std::vector<RepresentationBlock> layer_representations(const Network& net, const Dataset& data,
                                                       std::size_t first, std::size_t count,
                                                       RepresentationSource source = RepresentationSource::kSpikes);

// Same, for explicit inputs (e.g. adversarially perturbed copies).
std::vector<RepresentationBlock> layer_representations(const Network& net, const std::vector<SpikeTensor>& inputs,
                                                       RepresentationSource source = RepresentationSource::kSpikes);

struct CkaOptions {
  std::size_t batch_size = 128;
  std::size_t total = 4096;  // clamped to the dataset size
  RepresentationSource source = RepresentationSource::kSpikes;
};

// [layers(a) x layers(b)] minibatch CKA over the first `total` samples. A trailing
// partial batch is dropped so every batch has the same b; when fewer than
// batch_size samples are available they form one batch.
Matrix cka_matrix(const Network& a, const Network& b, const Dataset& data, const CkaOptions& options = {});

}  // namespace snnbench
