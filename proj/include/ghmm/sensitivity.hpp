#pragma once

#include "ghmm/finite_model.hpp"
#include "ghmm/model.hpp"

#include <functional>

namespace ghmm {

/// W_0^ν = D^ν[π_θ(x) f(y0 | x)] for every |ν| <= r, scaled by the base normalizer.
DerivBundle init_sensitivity(const Model& model, const Vec& theta, Obs y0, int r);

/// Advances every derivative filter by one observation (Leibniz expansion of
/// the one-step operator), then rescales all of them by the base normalizer.
DerivBundle sensitivity_step(const Model& model, const Vec& theta, const DerivBundle& bundle,
                             Obs y_prev, Obs y_t);

/// The one-step linear operator of a finite model acting on the stacked
/// unnormalized filters (W^{ν_0}; ...; W^{ν_{K-1}}) as one column: block (i, j)
/// is C(ν_i; ν_j) · (D^{ν_i - ν_j}[P diag f(y_t)])ᵀ when ν_j <= ν_i, zero
/// otherwise, so the matrix is block lower triangular.
Mat step_operator(const FiniteModel& model, const Vec& theta, Obs y_t, int r);

/// Runs the derivative filters over y and returns the final bundle.
DerivBundle derivatives(const Model& model, const Vec& theta, const Series& y, int r);

/// Calls `on_step(t, bundle)` after every observation.
void for_each_bundle(const Model& model, const Vec& theta, const Series& y, int r,
                     const std::function<void(std::size_t, const DerivBundle&)>& on_step);

Vec bundle_score(const DerivBundle& b);
Mat bundle_hessian(const DerivBundle& b);
double bundle_third(const DerivBundle& b, int i, int j, int k);

Vec score(const Model& model, const Vec& theta, const Series& y);

struct HessianResult {
  Mat value;          ///< (H + Hᵀ)/2
  double asymmetry;   ///< ‖H - Hᵀ‖_max / max(‖H‖_max, tiny) before symmetrization
  bool asymmetry_warning;  ///< asymmetry above 1e-6
};

HessianResult hessian(const Model& model, const Vec& theta, const Series& y);

/// All third derivatives, entry (i*q + j)*q + k.
std::vector<double> third_derivatives(const Model& model, const Vec& theta, const Series& y);

// Finite-difference oracles. Truncation error is O(h²); with `richardson`
// the first-derivative estimate combines steps h and h/2 for O(h⁴).
// StepTooSmall is thrown when h < 64 ε max(1, |θ_i|).

using ScalarFn = std::function<double(const Vec&)>;

Vec fd_gradient(const ScalarFn& f, const Vec& x, double h, bool richardson = false);
Mat fd_hessian(const ScalarFn& f, const Vec& x, double h);

Vec fd_score(const Model& model, const Vec& theta, const Series& y, double h, bool richardson = false);
Mat fd_hessian(const Model& model, const Vec& theta, const Series& y, double h);

}  // namespace ghmm
