#pragma once

#include "ghmm/finite_model.hpp"

#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace ghmm {

/// Finite HMM whose tables are affine in θ:
///   P(θ) = P0 + Σ_i θ_i P_i,  B(θ) = B0 + Σ_i θ_i B_i.
/// Derivatives of every order are exact, so order 3 is supported. Each
/// parameter may carry an open interval (lo, hi); bounded parameters are
/// mapped to the real line by a scaled tanh for the optimizer.
class AffineHmm : public FiniteModel {
 public:
  struct Param {
    std::string name;
    Mat dP;
    Mat dB;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
  };

  AffineHmm(Mat P0, Mat B0, std::vector<Param> params, std::string family = "affine-hmm");

  std::string family() const override { return family_; }
  int param_dim() const override { return static_cast<int>(params_.size()); }
  int max_order() const override { return 3; }
  int states() const override { return static_cast<int>(P0_.rows()); }
  int symbols() const override { return static_cast<int>(B0_.cols()); }
  std::vector<std::string> param_names() const override;

  void validate(const Vec& theta) const override;
  Vec to_free(const Vec& theta) const override;
  Vec from_free(const Vec& u) const override;
  Mat free_jacobian(const Vec& u) const override;

 protected:
  void fill(const Vec& theta, FiniteTables& t) const override;

 private:
  Mat P0_, B0_;
  std::vector<Param> params_;
  std::string family_;
};

/// Three-state HMM with uniform transitions and P(Y=1 | x) = (1, 0.5+δ, 0),
/// P(Y=2 | x) = 1 - P(Y=1 | x); θ = (δ) with δ in (-0.5, 0.5).
std::shared_ptr<AffineHmm> three_state_model();

/// Fixed-table HMM with no free parameters.
std::shared_ptr<AffineHmm> fixed_hmm(Mat P, Mat B);

/// First-order encoding of a k-th order chain on l symbols: tuple
/// (x_1..x_k) ↦ Σ_i x_i l^{k-i}. A tuple moves only to tuples whose prefix is
/// its suffix, i.e. (x_1..x_k) → (x_2..x_k, z) for the l choices of z.
struct KOrderEmbedding {
  int l = 0;
  int k = 0;
  int size = 0;

  int successor(int tuple, int z) const { return (tuple % (size / l)) * l + z; }
  int last(int tuple) const { return tuple % l; }
  std::vector<int> decode(int tuple) const;
  int encode(const std::vector<int>& xs) const;
  bool admissible(int from, int to) const { return successor(from, to % l) == to; }
  /// Free transition probabilities: l - 1 per tuple, i.e. l^{k+1} - l^k.
  long long free_params() const { return static_cast<long long>(size) * (l - 1); }
};

/// SizeCap when l^k exceeds 10^4.
KOrderEmbedding embed_korder(int l, int k);

/// Hidden k-th order chain on l states (embedded on l^k tuples) with emission
/// on the alphabet 1..A depending on the most recent state.
///
/// θ = (transition logits, emission logits). Tuple i has logits
/// θ[i(l-1) + z] for successors z < l-1; the logit of z = l-1 is fixed at 0.
/// Emission of state x uses θ[T + x(A-1) + s] for symbols s < A-1, T = l^k(l-1).
class KOrderHmm : public FiniteModel {
 public:
  KOrderHmm(int l, int k, int alphabet);

  std::string family() const override { return "korder-hmm"; }
  int param_dim() const override { return transition_params() + l_ * (A_ - 1); }
  int max_order() const override { return 2; }
  int states() const override { return emb_.size; }
  int symbols() const override { return A_; }
  std::vector<std::string> param_names() const override;

  int hidden_states() const { return l_; }
  int order() const { return emb_.k; }
  int transition_params() const { return static_cast<int>(emb_.free_params()); }
  const KOrderEmbedding& embedding() const { return emb_; }

  void validate(const Vec& theta) const override;

  /// θ reproducing given tables. `transition` is l^k × l (probability of each
  /// next symbol z per tuple) and `emission` is l × A; all entries must be > 0.
  Vec theta_from(const Mat& transition, const Mat& emission) const;
  /// Mildly asymmetric starting point: each tuple prefers to repeat its last
  /// state and state x prefers symbol ⌊xA/l⌋.
  Vec default_theta() const;

 protected:
  void fill(const Vec& theta, FiniteTables& t) const override;

 private:
  int l_, A_;
  KOrderEmbedding emb_;
};

/// First-order HMM with D states and alphabet A in the softmax parametrization.
std::shared_ptr<KOrderHmm> softmax_hmm(int states, int alphabet);

/// θ of the (k+1)-order model with the same law as the given k-order θ.
Vec korder_lift(const KOrderHmm& from, const Vec& theta);

/// θ of a first-order (D+1)-state model equal in law to the D-state θ: the
/// last state is split in two halves with identical rows and emissions.
Vec split_last_state(const KOrderHmm& from, const Vec& theta);

}  // namespace ghmm
