#pragma once

#include <cstddef>
#include <stdexcept>

#include <Eigen/Dense>

namespace snnbench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Time-major activity: one row per timestep, one column per channel.
// Entries are non-negative. Layer outputs are binary; encoded inputs may carry
// small counts, and perturbed inputs real-valued intensities.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(std::size_t t_steps, std::size_t channels)
      : data_(RowMatrix::Zero(static_cast<Eigen::Index>(t_steps),
                              static_cast<Eigen::Index>(channels))) {
    if (t_steps == 0) throw std::invalid_argument("SpikeTensor: T must be >= 1");
  }
  explicit SpikeTensor(RowMatrix data) : data_(std::move(data)) { validate(); }

  std::size_t t_steps() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t channels() const { return static_cast<std::size_t>(data_.cols()); }

  const RowMatrix& data() const { return data_; }
  RowMatrix& mutable_data() { return data_; }

  double operator()(std::size_t t, std::size_t c) const {
    return data_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
  }
  double& operator()(std::size_t t, std::size_t c) {
    return data_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
  }

  auto step(std::size_t t) const { return data_.row(static_cast<Eigen::Index>(t)); }

  // First `t` timesteps (used for time-truncated evaluation).
  SpikeTensor head(std::size_t t) const {
    if (t == 0 || t > t_steps()) throw std::out_of_range("SpikeTensor::head: t out of range");
    return SpikeTensor(RowMatrix(data_.topRows(static_cast<Eigen::Index>(t))));
  }

  double total() const { return data_.sum(); }

  void validate() const {
    if (data_.rows() < 1) throw std::invalid_argument("SpikeTensor: T must be >= 1");
    if (!data_.allFinite()) throw std::invalid_argument("SpikeTensor: non-finite entry");
    if ((data_.array() < 0.0).any()) throw std::invalid_argument("SpikeTensor: negative entry");
  }

  friend bool operator==(const SpikeTensor& a, const SpikeTensor& b) {
    return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
           a.data_ == b.data_;
  }

 private:
  RowMatrix data_;
};

}  // namespace snnbench
