#pragma once

#include "ghmm/models/discrete_hmm.hpp"
#include "ghmm/rng.hpp"

#include <cmath>
#include <vector>

namespace testing {

using ghmm::Mat;
using ghmm::Vec;

inline Vec random_vec(ghmm::Rng& rng, int n, double scale = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

inline std::vector<int> random_symbols(ghmm::Rng& rng, int alphabet, std::size_t n) {
  std::vector<int> ys(n);
  for (auto& y : ys) y = 1 + static_cast<int>(rng.uniform() * alphabet);
  return ys;
}

inline Mat random_stochastic(ghmm::Rng& rng, int rows, int cols) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = 0.05 + rng.uniform();
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline double rel_err(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace testing
