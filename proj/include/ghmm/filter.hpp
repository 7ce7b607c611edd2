#pragma once

#include "ghmm/model.hpp"

#include <vector>

namespace ghmm {

/// weights ∝ π_θ(x) f(y0 | x), log_norm = log Σ_x π_θ(x) f(y0 | x).
FilterState init_filter(const Model& model, const Vec& theta, Obs y0);

/// One predict-update step. The input weights are renormalized first, so the
/// result does not depend on any positive rescaling of `state.weights`.
FilterState filter_step(const Model& model, const Vec& theta, const FilterState& state, Obs y_prev,
                        Obs y_t);

/// log L(θ; y_0..y_{n-1}). Filter errors are rethrown with the failing index.
double log_likelihood(const Model& model, const Vec& theta, const Series& y);

/// Per-step log-normalizers; element 0 is log p(y_0). log_likelihood is their
/// running sum, accumulated left to right.
std::vector<double> log_increments(const Model& model, const Vec& theta, const Series& y);

}  // namespace ghmm
