#pragma once

#include "ghmm/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace ghmm {

/// Δ_t^j = t^j - t^{j-1}.
long long delta(int t, int j);

struct FitOptions {
  int max_iter = 500;
  double grad_tol = 1e-6;  ///< on ‖∂ℓ/∂u‖∞ in the optimizer's free coordinates
  int starts = 5;          ///< start 0 is θ_init itself, the rest are jittered
  double jitter = 0.5;     ///< sd of the Gaussian jitter in free coordinates
  std::uint64_t seed = 0;
  /// Coordinates with mask false stay at their initial value.
  std::vector<bool> free;
  int threads = 1;
};

struct FitResult {
  Vec theta;
  double loglik = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;  ///< ‖∂ℓ/∂u‖∞ over free coordinates at the returned point
  bool converged = false;
  bool boundary_hit = false;  ///< a free coordinate left [-30, 30]
  int best_start = 0;
  std::vector<double> start_logliks;
};

/// Quasi-Newton (BFGS) ascent of log L in the model's free coordinates with
/// Armijo backtracking, from several starts; the highest log-likelihood wins
/// (earliest start on ties). Non-convergence is flagged, not thrown.
FitResult mle_fit(const Model& model, const Series& y, const Vec& theta_init, const FitOptions& options = {});

/// 2 [ℓ_full - ℓ_restricted], clamped at 0 for gaps within 1e-4.
/// NestingViolation when the restricted fit is better by more than 1e-4.
double lr_stat(const FitResult& full, const FitResult& restricted);

struct AicRow {
  int k = 0;
  double loglik = 0.0;
  long long penalty = 0;  ///< Δ
  double aic = 0.0;       ///< -2 ℓ + 2 Δ
  int params = 0;         ///< free parameters of the fitted model
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  Vec theta;
};

struct AicReport {
  std::vector<AicRow> rows;
  int selected = 0;
};

/// Hidden chain of order k = 1..k_max on l states, alphabet A. Order k+1 is
/// warm-started from the lifted order-k fit. Penalty Δ_l^{k+1}.
AicReport aic_order_select(const Series& y, int l, int k_max, int alphabet, const FitOptions& options = {});

/// Order-m hidden chain on k states for each k in `ks` (ascending). For m = 1
/// each k+1 fit is warm-started by splitting the last state of the k fit.
/// Penalty Δ_k^{m+1}.
AicReport aic_state_select(const Series& y, int m, const std::vector<int>& ks, int alphabet,
                           const FitOptions& options = {});

/// Smallest AIC among converged rows (all rows if none converged); ties within
/// 1e-9 go to the earlier row.
int select_row(const std::vector<AicRow>& rows);

void write_aic_csv(std::ostream& os, const AicReport& report);

}  // namespace ghmm
