#pragma once

#include "ghmm/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ghmm {

/// GARCH(1,1): Y_t = σ_t ε_t with σ_t² = δ + α Y_{t-1}² + β σ_{t-1}², θ = (δ, α, β).
/// The filter state is the deterministic σ_t². By default σ_0² is the
/// stationary mean δ/(1-α-β) and its θ-derivatives are propagated; a fixed
/// override has zero derivatives.
class Garch11 : public Model {
 public:
  explicit Garch11(std::optional<double> sigma0_sq = std::nullopt);

  std::string family() const override { return "garch11"; }
  int param_dim() const override { return 3; }
  int max_order() const override { return 2; }
  std::vector<std::string> param_names() const override { return {"delta", "alpha", "beta"}; }

  void validate(const Vec& theta) const override;
  std::unique_ptr<Evaluator> bind(const Vec& theta, int order) const override;
  void simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int> x0,
                     Trajectory& out) const override;

  /// δ = exp(u0); (α, β, 1-α-β) = softmax(u1, u2, 0).
  Vec to_free(const Vec& theta) const override;
  Vec from_free(const Vec& u) const override;
  Mat free_jacobian(const Vec& u) const override;

  const std::optional<double>& sigma0_sq() const { return sigma0_sq_; }

  /// σ_t² for t = 0..n-1 along y.
  std::vector<double> variances(const Vec& theta, const Series& y) const;

 private:
  std::optional<double> sigma0_sq_;
};

struct SeriesEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  int terms = 0;  ///< truncation length of the series
};

/// Monte Carlo value of E[(Σ_{k>=1} β^{k-1} σ_{-k}²)² / (2 σ_0⁴)], the (β, β)
/// Fisher entry under the stationary law. The sum is cut once β^k < 1e-12.
/// The simulation discards max(n/10, terms) warm-up steps before averaging
/// over n positions.
SeriesEstimate garch_fisher_series(const Vec& theta, std::size_t n, std::uint64_t seed);

/// Linear RNN view of the σ² recursion: X_t = δ + τ_t X_{t-1} with
/// η_t = Y_{t-1}²/X_{t-1} and τ_t = β + α η_t. X_t coincides with σ_t².
struct LinearRnnStep {
  double eta;
  double tau;
  double x;
};
std::vector<LinearRnnStep> linear_rnn_path(const Vec& theta, const Series& y, double x0);

}  // namespace ghmm
