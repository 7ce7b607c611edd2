#pragma once

#include "ghmm/estimates.hpp"
#include "ghmm/model.hpp"

#include <cstdint>
#include <vector>

namespace ghmm {

/// x_{t+1} = Φ x_t + F ε_t,  y_t = H x_t + ε_t,  ε_t ~ N(0, Σ).
struct LssmSpec {
  Mat Phi;
  Mat F;
  Mat H;
  Mat Sigma;
  int state_dim() const { return static_cast<int>(Phi.rows()); }
  int obs_dim() const { return static_cast<int>(H.rows()); }
};

/// VARMA Σ_{j=0}^p α_j y_{t-j} = Σ_{j=0}^q β_j ε_{t-j} with α_0 = β_0 = I, as
/// the block companion form with h = max(p, q): Φ has -α_j down its first
/// block column and identities on the block superdiagonal, F stacks β_j - α_j,
/// and H = (I, 0, ..., 0). Missing α_j or β_j are zero.
LssmSpec varma_to_lssm(const std::vector<Mat>& alphas, const std::vector<Mat>& betas, const Mat& Sigma);

/// Solves P = Φ P Φᵀ + Q through (I - Φ⊗Φ) vec P = vec Q.
Mat solve_stein(const Mat& Phi, const Mat& Q);

struct KalmanResult {
  Series innovations;
  std::vector<Mat> covariances;  ///< innovation covariances S_t
  double loglik = 0.0;
  int clipped = 0;  ///< steps where the state covariance was clipped back to PSD
};

/// Innovations-form Kalman filter started from x̂_0 = 0 and the stationary
/// P_0 = Φ P_0 Φᵀ + F Σ Fᵀ. The noise enters both equations, so
/// S = H P Hᵀ + Σ and K = (Φ P Hᵀ + F Σ) S⁻¹.
KalmanResult kalman_filter(const LssmSpec& spec, const Series& y);

struct SteadyState {
  Mat P;
  Mat S;
  Mat K;
  int iterations = 0;
};

/// Fixed point of the Riccati recursion, iterated to 1e-12 (at most 10^5
/// iterations, else RiccatiNoConvergence).
SteadyState steady_state(const LssmSpec& spec);

/// Matrix-valued function of θ with its first and second θ-derivatives.
/// dd is indexed by pairs a <= b in lexicographic order. Arithmetic applies
/// the product rule; this is not a general automatic differentiation type.
struct MatrixJet {
  Mat v;
  std::vector<Mat> d;
  std::vector<Mat> dd;
  int q = 0;
  int order = 0;

  MatrixJet() = default;
  MatrixJet(Mat value, int q, int order);

  static int pair(int a, int b, int q);
  int pairs() const { return q * (q + 1) / 2; }

  MatrixJet transpose() const;
  MatrixJet inverse() const;
  MatrixJet symmetrized() const;
  double max_abs_diff(const MatrixJet& other) const;
};

MatrixJet operator*(const MatrixJet& a, const MatrixJet& b);
MatrixJet operator+(const MatrixJet& a, const MatrixJet& b);
MatrixJet operator-(const MatrixJet& a, const MatrixJet& b);
MatrixJet operator*(double s, const MatrixJet& a);

/// 1×1 jet of log det S given S and S⁻¹.
MatrixJet logdet(const MatrixJet& S, const MatrixJet& Sinv);

/// Jet of the solution of P = Φ P Φᵀ + Q.
MatrixJet solve_stein(const MatrixJet& Phi, const MatrixJet& Q);

/// VARMA(p, q) on R^m with known Σ. θ lists the entries of α_1..α_p and then
/// β_1..β_q, each m×m block row-major.
class VarmaModel : public Model {
 public:
  VarmaModel(int m, int p, int q, Mat Sigma);

  std::string family() const override { return "varma"; }
  int param_dim() const override { return m_ * m_ * (p_ + q_); }
  std::size_t obs_dim() const override { return static_cast<std::size_t>(m_); }
  int max_order() const override { return 2; }
  std::vector<std::string> param_names() const override;

  void validate(const Vec& theta) const override;
  std::unique_ptr<Evaluator> bind(const Vec& theta, int order) const override;
  void simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int> x0,
                     Trajectory& out) const override;

  std::vector<Mat> alphas(const Vec& theta) const;
  std::vector<Mat> betas(const Vec& theta) const;
  LssmSpec spec(const Vec& theta) const;
  /// θ-jets of Φ and F (both are linear in θ).
  MatrixJet phi_jet(const Vec& theta, int order) const;
  MatrixJet f_jet(const Vec& theta, int order) const;

  int ar_order() const { return p_; }
  int ma_order() const { return q_; }
  int dim() const { return m_; }
  const Mat& sigma() const { return Sigma_; }

 private:
  int m_, p_, q_;
  Mat Sigma_;
};

/// Long-run average of (∂e_t)ᵀ S⁻¹ (∂e_t) + ½ tr(S⁻¹ ∂S S⁻¹ ∂S) along the
/// steady-state innovation recursion e_t = y_t - H x̂_t,
/// x̂_{t+1} = Φ x̂_t + K_∞ e_t, on one simulated trajectory.
FisherEstimate lssm_fisher(const VarmaModel& model, const Vec& theta, std::size_t n, std::uint64_t seed,
                           std::size_t burn_in);

}  // namespace ghmm
