#pragma once

#include "ghmm/types.hpp"

#include <cstdint>
#include <string>

namespace ghmm {

struct FisherEstimate {
  Mat value;  ///< symmetric q×q
  Mat se;     ///< entrywise batch-means standard errors
  std::size_t n = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  std::string method;  ///< "hessian-average", "score-outer" or "lssm-asymptotic"
};

struct KlEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  double mean_ll1 = 0.0;  ///< window mean of log-likelihood increments under θ1
  double mean_ll0 = 0.0;  ///< same trajectory, evaluated at θ0
  bool infinite = false;  ///< θ0 gives the trajectory zero likelihood
};

}  // namespace ghmm
