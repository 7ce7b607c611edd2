#pragma once

#include "ghmm/estimates.hpp"
#include "ghmm/finite_model.hpp"
#include "ghmm/model.hpp"
#include "ghmm/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ghmm {

/// Common sampling settings. `burn_in` defaults to n/10.
struct SampleSpec {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> burn_in;
  std::optional<int> x0;

  std::size_t window_start() const { return burn_in.value_or(n / 10); }
};

/// -(1/(n - burn_in)) Σ_window ΔD² log L on one trajectory simulated at θ0.
FisherEstimate fisher_hessian_estimate(const Model& model, const Vec& theta0, const SampleSpec& s);
/// (1/(n - burn_in)) Σ_window g_t g_tᵀ with g_t the per-step score increment.
FisherEstimate fisher_score_estimate(const Model& model, const Vec& theta0, const SampleSpec& s);

/// (1/(n - burn_in)) Σ_window [ℓ_t(θ1) - ℓ_t(θ0)] on one trajectory simulated at
/// θ1. Zero likelihood under θ0 gives a tagged infinity.
KlEstimate kl_estimate(const Model& model, const Vec& theta1, const Vec& theta0, const SampleSpec& s);
/// Same, with the trajectory drawn from an explicit stream.
KlEstimate kl_estimate(const Model& model, const Vec& theta1, const Vec& theta0, const SampleSpec& s,
                       Rng rng);
/// Same, on a given trajectory.
KlEstimate kl_on_series(const Model& model, const Vec& theta1, const Vec& theta0, const Series& y,
                        std::size_t burn_in);

/// (1/n) Σ_y L(θ1; y) log(L(θ1; y) / L(θ0; y)) over all sequences of n + 1
/// symbols. TooLarge when the alphabet size to the power n + 1 exceeds 10^6.
double kl_exact_small(const FiniteModel& model, const Vec& theta1, const Vec& theta0, std::size_t n);

struct QuadRow {
  double eps = 0.0;
  double kl = 0.0;
  double kl_se = 0.0;
  double quad = 0.0;  ///< ε² vᵀIv / 2
  double rho = 0.0;
  double rho_se = 0.0;
  double dev = 0.0;   ///< |ρ - 1|
};

struct QuadCheck {
  std::vector<QuadRow> rows;
  double vIv = 0.0;
  double vIv_se = 0.0;
  bool dev_nonincreasing = false;  ///< |ρ - 1| never grows down the grid
};

/// ρ(ε) = K(θ0 + εv, θ0) / (ε² vᵀI(θ0)v / 2) for each ε. I is estimated with
/// fisher_hessian_estimate with the same sampling settings unless supplied. All KL
/// estimates share the sampling seed. The grid must be strictly
/// decreasing and positive.
QuadCheck quadratic_check(const Model& model, const Vec& theta0, const Vec& v, const std::vector<double>& eps,
                          const SampleSpec& s, const FisherEstimate* fisher = nullptr, int threads = 1);

struct CrlbReport {
  double classical = 0.0;  ///< vᵀI⁻¹v
  double minimax = 0.0;    ///< ‖v‖² / (16 vᵀIv)
  std::vector<std::pair<std::size_t, double>> per_n;  ///< (n, vᵀI⁻¹v / n)
  double condition = 0.0;
  bool pseudo_inverse = false;  ///< I was numerically singular
};

CrlbReport crlb_report(const Mat& info, const Vec& v, const std::vector<std::size_t>& ns);

struct AdditivityCheck {
  KlEstimate product;
  KlEstimate a;
  KlEstimate b;
  double sum = 0.0;
  double sum_se = 0.0;
  double diff = 0.0;
};

/// K of the product (A, B) against K_A + K_B. With shared streams the
/// components are evaluated on exactly the product's component trajectories;
/// otherwise they use independent streams (split 2 and 3 of the seed).
AdditivityCheck kl_additivity_check(std::shared_ptr<const Model> a, std::shared_ptr<const Model> b,
                                    const Vec& theta1_a, const Vec& theta0_a, const Vec& theta1_b,
                                    const Vec& theta0_b, const SampleSpec& s, bool shared_streams);

struct SweepPoint {
  double value = 0.0;                ///< parameter value of θ1 at the swept coordinate
  std::vector<KlEstimate> replicates;
  double mean = 0.0;                 ///< average over replicates
  double se = 0.0;                   ///< sqrt(Σ se_i²) / R
};

/// K(θ1(δ), θ0) for each δ placed at coordinate `index` of θ0, with R
/// replicates drawn from Rng(seed).split(r). Replicates are independent of δ,
/// so every δ sees the same R streams.
std::vector<SweepPoint> kl_sweep(const Model& model, const Vec& theta0, int index, const std::vector<double>& grid,
                                 const SampleSpec& s, int replicates, int threads = 1);

}  // namespace ghmm
