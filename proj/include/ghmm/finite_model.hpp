#pragma once

#include "ghmm/model.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace ghmm {

/// Transition, emission and initial-law tables of a finite HMM together with
/// their parameter derivatives, one entry per multi-index of `index`.
/// Symbols are 1-based; column s-1 of B holds f(s | x).
struct FiniteTables {
  int states = 0;
  int symbols = 0;
  std::shared_ptr<const MultiIndexSet> index;
  std::vector<Mat> P;
  std::vector<Mat> B;
  std::vector<Vec> init;
  /// Rows of P[k] / B[k] holding a nonzero entry. Derivative tables of the
  /// supported families are sparse, and the filter only touches these rows.
  std::vector<std::vector<int>> p_rows;
  std::vector<std::vector<int>> b_rows;

  void compute_sparsity();
};

/// Base for every model with a finite hidden space and a finite alphabet whose
/// emission depends only on the current hidden state.
class FiniteModel : public Model {
 public:
  virtual int states() const = 0;
  virtual int symbols() const = 0;
  std::optional<int> hidden_size() const override { return states(); }

  /// Validates θ and builds the tables with derivatives up to `order`.
  FiniteTables tables(const Vec& theta, int order) const;

  std::unique_ptr<Evaluator> bind(const Vec& theta, int order) const override;
  void simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int> x0,
                     Trajectory& out) const override;

  /// Replaces the stationary initial law with a fixed distribution. The
  /// replacement does not depend on θ, so its derivatives vanish.
  void set_initial_law(std::optional<Vec> nu);
  const std::optional<Vec>& initial_law() const { return initial_; }

 protected:
  /// Fills t.P[k] and t.B[k] for every multi-index k (arrays are pre-sized
  /// and zeroed).
  virtual void fill(const Vec& theta, FiniteTables& t) const = 0;

 private:
  std::optional<Vec> initial_;
};

/// Stationary law π of P[0] and its derivatives for every multi-index,
/// using D^ν π (I - P + 11ᵀ) = Σ_{ν_k ≠ 0} C · D^{ν_j}π · D^{ν_k}P.
/// Throws InvalidStochasticMatrix when the chain has no unique stationary law.
std::vector<Vec> stationary_derivatives(const std::vector<Mat>& P, const MultiIndexSet& index);

/// Derivatives of p = softmax(s) from derivatives of the logits. `s1[a]` is
/// ∂_a s; `s2[j]` is ∂_a∂_b s for the j-th pair a <= b in lexicographic order.
/// Pass null for s2/p2 when only first derivatives are needed.
void softmax_derivatives(const Vec& p, const std::vector<Vec>& s1, const std::vector<Vec>* s2,
                         std::vector<Vec>& p1, std::vector<Vec>* p2);

/// Cumulative log-likelihood derivatives from scaled moments m[k] = Σ_x w_k(x)
/// (m[0] = 1): the ratio formulas L_a/L, L_ab/L - L_a L_b/L², and the
/// third-order analogue.
Vec log_derivatives(const MultiIndexSet& index, const Vec& m, double log_norm);

}  // namespace ghmm
