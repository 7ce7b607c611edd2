#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace ghmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A single observation. Finite-alphabet models store a 1-based symbol in y[0].
using Obs = std::span<const double>;

inline int symbol(Obs y) { return static_cast<int>(y[0]); }

/// Observation sequence stored row-major, one row of `dim` values per time step.
class Series {
 public:
  Series() = default;
  explicit Series(std::size_t dim) : dim_(dim) {}
  Series(std::size_t dim, std::vector<double> values);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool empty() const { return size() == 0; }

  Obs operator[](std::size_t t) const { return {values_.data() + t * dim_, dim_}; }
  double at(std::size_t t, std::size_t j = 0) const { return values_[t * dim_ + j]; }

  void reserve(std::size_t n) { values_.reserve(n * dim_); }
  void push_back(Obs y);
  void push_back(double y);

  /// First n observations.
  Series head(std::size_t n) const;

  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const Series&, const Series&) = default;

 private:
  std::size_t dim_ = 1;
  std::vector<double> values_;
};

/// Series of 1-based symbols.
Series symbols(const std::vector<int>& ys);

}  // namespace ghmm
