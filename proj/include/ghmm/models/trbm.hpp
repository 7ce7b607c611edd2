#pragma once

#include "ghmm/finite_model.hpp"

#include <memory>

namespace ghmm {

/// Temporal RBM with binary hidden h ∈ {0,1}^P and visible v ∈ {0,1}^D:
///   P(v_t, h_t | h_{t-1}) ∝ exp(v_tᵀ b_Y + h_tᵀ b_H + v_tᵀ W h_t + h_{t-1}ᵀ W' h_t).
struct TrbmSpec {
  Mat W;    ///< D×P
  Mat Wp;   ///< P×P
  Vec bY;   ///< D
  Vec bH;   ///< P
  int visible() const { return static_cast<int>(W.rows()); }
  int hidden() const { return static_cast<int>(W.cols()); }
};

/// The TRBM as an exact finite HMM on 2^P hidden configurations with alphabet
/// 2^D. Visible vector v is symbol 1 + Σ_d v_d 2^d; hidden configuration h is
/// state Σ_j h_j 2^j.
///
/// θ = (W row-major, W' row-major, b_Y, b_H). Tables come from normalizing
/// exp(-energy) over all 2^{P+D} pairs for each h_{t-1}; derivatives use the
/// equivalent logits: emission log f(v | h) = Σ_d [v_d z_d - softplus(z_d)]
/// with z = b_Y + W h, and transition logits
/// s_{h}(h') = h'ᵀ b_H + hᵀ W' h' + Σ_d softplus(b_Y,d + (W h')_d).
class TrbmModel : public FiniteModel {
 public:
  TrbmModel(int visible, int hidden);

  std::string family() const override { return "trbm"; }
  int param_dim() const override { return D_ * P_ + P_ * P_ + D_ + P_; }
  int max_order() const override { return 2; }
  int states() const override { return 1 << P_; }
  int symbols() const override { return 1 << D_; }
  std::vector<std::string> param_names() const override;

  void validate(const Vec& theta) const override;

  Vec theta_of(const TrbmSpec& spec) const;
  TrbmSpec spec_of(const Vec& theta) const;

  /// P(v, h | h_prev) for every (v, h), rows indexed by symbol-1 and columns by h.
  Mat joint(const Vec& theta, int h_prev) const;

 protected:
  void fill(const Vec& theta, FiniteTables& t) const override;

 private:
  int D_, P_;
};

struct TrbmHmm {
  std::shared_ptr<TrbmModel> model;
  Vec theta;
};

/// StateSpaceTooLarge when P or D exceeds 6.
TrbmHmm trbm_to_hmm(const TrbmSpec& spec);

}  // namespace ghmm
