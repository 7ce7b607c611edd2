#include "helpers.hpp"

#include "ghmm/error.hpp"
#include "ghmm/info.hpp"
#include "ghmm/models/discrete_hmm.hpp"
#include "ghmm/models/garch.hpp"
#include "ghmm/models/lssm.hpp"
#include "ghmm/models/product.hpp"
#include "ghmm/filter.hpp"
#include "ghmm/montecarlo.hpp"

#include <doctest.h>

#include <cmath>

using namespace ghmm;
using namespace testing;

namespace {

Vec d(double v) { return Vec::Constant(1, v); }

SampleSpec spec(std::size_t n, std::uint64_t seed) {
  SampleSpec s;
  s.n = n;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("fisher estimators agree on the three-state example") {
  const auto m = three_state_model();
  const FisherEstimate h = fisher_hessian_estimate(*m, d(0.1), spec(100000, 3));
  const FisherEstimate s = fisher_score_estimate(*m, d(0.1), spec(100000, 3));
  CHECK(h.method == "hessian-average");
  CHECK(s.method == "score-outer");
  CHECK(std::abs(h.value(0, 0) - s.value(0, 0)) < 3 * std::hypot(h.se(0, 0), s.se(0, 0)));
  // i.i.d. Bernoulli(0.5 + δ/3) observations: I = (1/9) / (p (1 - p)).
  const double p = 0.5 + 0.1 / 3;
  CHECK(std::abs(h.value(0, 0) - 1.0 / (9 * p * (1 - p))) < 3 * h.se(0, 0) + 1e-3);
}

TEST_CASE("fisher estimates are deterministic") {
  const auto m = three_state_model();
  const FisherEstimate a = fisher_hessian_estimate(*m, d(0.1), spec(5000, 9));
  const FisherEstimate b = fisher_hessian_estimate(*m, d(0.1), spec(5000, 9));
  CHECK(a.value(0, 0) == b.value(0, 0));
  CHECK(a.se(0, 0) == b.se(0, 0));
}

TEST_CASE("fisher of a parameter-free model is empty") {
  const auto m = fixed_hmm(Mat::Constant(2, 2, 0.5), Mat::Constant(2, 2, 0.5));
  const FisherEstimate f = fisher_hessian_estimate(*m, Vec(0), spec(1000, 1));
  CHECK(f.value.size() == 0);
}

TEST_CASE("zero-information direction") {
  AffineHmm::Param live, idle;
  live.name = "live";
  live.dB = Mat::Zero(2, 2);
  live.dB(0, 0) = 1;
  live.dB(0, 1) = -1;
  live.dP = Mat::Zero(2, 2);
  live.lo = -0.2;
  live.hi = 0.2;
  idle.name = "idle";
  idle.dP = Mat::Zero(2, 2);
  idle.dB = Mat::Zero(2, 2);
  Mat P(2, 2), B(2, 2);
  P << 0.9, 0.1, 0.2, 0.8;
  B << 0.7, 0.3, 0.2, 0.8;
  const AffineHmm m(P, B, {live, idle});
  Vec th(2);
  th << 0.05, 0.0;
  const FisherEstimate f = fisher_score_estimate(m, th, spec(20000, 2));
  CHECK(std::abs(f.value(1, 1)) <= 3 * f.se(1, 1) + 1e-15);
  CHECK(f.value(0, 0) > 0.0);
  CHECK((f.value - f.value.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("AR(1) fisher information") {
  const VarmaModel m(1, 1, 0, Mat::Identity(1, 1));
  const Vec th = d(-0.5);
  const FisherEstimate h = fisher_hessian_estimate(m, th, spec(200000, 5));
  const FisherEstimate l = lssm_fisher(m, th, 200000, 5, 20000);
  CHECK(std::abs(h.value(0, 0) / (4.0 / 3) - 1) < 0.02);
  CHECK(std::abs(l.value(0, 0) / (4.0 / 3) - 1) < 0.02);
  CHECK(std::abs(h.value(0, 0) - l.value(0, 0)) < 3 * std::hypot(h.se(0, 0), l.se(0, 0)));
}

TEST_CASE("KL at identical parameters is exactly zero") {
  const auto m = three_state_model();
  const KlEstimate k = kl_estimate(*m, d(0.1), d(0.1), spec(2000, 1));
  CHECK(k.value == 0.0);
  CHECK(k.se == 0.0);
  const double e = kl_exact_small(*m, d(0.1), d(0.1), 6);
  CHECK(e == 0.0);
}

TEST_CASE("KL on the sweep grid") {
  const auto m = three_state_model();
  SampleSpec s = spec(50000, 1);
  s.burn_in = 0;
  s.x0 = 0;
  const auto sweep = kl_sweep(*m, d(0.0), 0, {0.1, 0.125, 0.15, 0.175, 0.2}, s, 2);
  REQUIRE(sweep.size() == 5);
  for (const auto& p : sweep) {
    CHECK(p.mean > 0.0);
    CHECK(p.replicates.size() == 2);
  }
  CHECK(sweep[4].mean > sweep[0].mean);
}

TEST_CASE("KL estimate is non-negative within noise and seeds agree") {
  const auto m = three_state_model();
  const KlEstimate a = kl_estimate(*m, d(0.2), d(0.0), spec(200000, 1));
  const KlEstimate b = kl_estimate(*m, d(0.2), d(0.0), spec(200000, 2));
  CHECK(a.value + 3 * a.se >= 0);
  CHECK(std::abs(a.value - b.value) < 3 * std::hypot(a.se, b.se));
  const double exact = kl_exact_small(*m, d(0.2), d(0.0), 8);
  // Per-step value of the exact n-step oracle includes one extra observation.
  CHECK(std::abs(a.value - exact * 8 / 9) < 3 * a.se);
  CHECK(std::abs((a.mean_ll1 - a.mean_ll0) - a.value) < 1e-10);
}

TEST_CASE("zero likelihood under the reference gives a tagged infinity") {
  Mat B0(2, 2);
  AffineHmm::Param p;
  p.name = "leak";
  p.dP = Mat::Zero(2, 2);
  p.dB = Mat::Zero(2, 2);
  p.dB(0, 0) = -1;
  p.dB(0, 1) = 1;
  p.lo = -0.1;
  p.hi = 1.0;
  B0 << 1, 0, 1, 0;
  const AffineHmm m(Mat::Constant(2, 2, 0.5), B0, {p});
  const KlEstimate k = kl_estimate(m, d(0.5), d(0.0), spec(1000, 3));
  CHECK(k.infinite);
  CHECK(std::isinf(k.value));
  CHECK(std::isinf(kl_exact_small(m, d(0.5), d(0.0), 4)));
}

TEST_CASE("exact small-instance KL") {
  const auto m = three_state_model();
  const double v = kl_exact_small(*m, d(0.2), d(0.0), 8);
  CHECK(v == doctest::Approx(0.010029842358350574).epsilon(1e-12));
  Rng rng(14);
  for (int rep = 0; rep < 5; ++rep) {
    const KOrderHmm k(2, 1, 2);
    const Vec t1 = random_vec(rng, k.param_dim()), t0 = random_vec(rng, k.param_dim());
    CHECK(kl_exact_small(k, t1, t0, 6) >= 0.0);
  }
  try {
    kl_exact_small(*m, d(0.2), d(0.0), 20);
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooLarge);
  }
}

TEST_CASE("crlb arithmetic") {
  const CrlbReport r = crlb_report(Mat::Constant(1, 1, 4.0), d(1.0), {10, 100});
  CHECK(r.classical == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(r.minimax == doctest::Approx(1.0 / 64).epsilon(1e-15));
  CHECK(r.per_n[1].second == doctest::Approx(0.0025).epsilon(1e-15));
  const CrlbReport s = crlb_report(Mat::Constant(1, 1, 4.0), d(3.0), {});
  CHECK(s.classical == doctest::Approx(9 * 0.25).epsilon(1e-15));
  CHECK(s.minimax == doctest::Approx(1.0 / 64).epsilon(1e-15));
  Mat sing(2, 2);
  sing << 1, 1, 1, 1;
  Vec v(2);
  v << 1, 1;
  const CrlbReport p = crlb_report(sing, v, {});
  CHECK(p.pseudo_inverse);
  CHECK(p.classical == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadratic check validates its grid") {
  const auto m = three_state_model();
  FisherEstimate f;
  f.value = Mat::Constant(1, 1, 0.45);
  f.se = Mat::Zero(1, 1);
  try {
    quadratic_check(*m, d(0.1), d(1.0), {0.1, 0.0}, spec(1000, 1), &f);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.field() == "estimator.eps_grid");
  }
  const QuadCheck q = quadratic_check(*m, d(0.1), d(1.0), {0.2, 0.1}, spec(20000, 1), &f);
  REQUIRE(q.rows.size() == 2);
  CHECK(q.rows[0].quad == doctest::Approx(0.04 * 0.45 / 2).epsilon(1e-15));
}

TEST_CASE("product model likelihood factorizes") {
  const auto a = three_state_model();
  const auto g = std::make_shared<Garch11>();
  const ProductModel p(a, g);
  Vec tg(3);
  tg << 0.1, 0.2, 0.7;
  const Vec th = ProductModel::join(d(0.1), tg);
  const Trajectory tr = simulate(p, th, 300, 4);
  CHECK(tr.y.dim() == 2);
  const double lp = log_likelihood(p, th, tr.y);
  const double la = log_likelihood(*a, d(0.1), p.part_a(tr.y)), lg = log_likelihood(*g, tg, p.part_b(tr.y));
  CHECK(lp == doctest::Approx(la + lg).epsilon(1e-13));
  Rng child = Rng(4).split(0);
  CHECK(p.part_a(tr.y) == simulate(*a, d(0.1), 300, child).y);
}

TEST_CASE("KL additivity") {
  const auto a = three_state_model();
  const auto b = three_state_model();
  const SampleSpec s = spec(20000, 8);
  const AdditivityCheck same = kl_additivity_check(a, b, d(0.1), d(0.1), d(0.1), d(0.1), s, true);
  CHECK(same.product.value == 0.0);
  CHECK(same.sum == 0.0);
  CHECK(same.diff == 0.0);
  const AdditivityCheck shared = kl_additivity_check(a, b, d(0.2), d(0.0), d(0.2), d(0.0), s, true);
  CHECK(std::abs(shared.diff) < 1e-12);
  const AdditivityCheck indep = kl_additivity_check(a, b, d(0.2), d(0.0), d(0.2), d(0.0), s, false);
  CHECK(std::abs(indep.diff) < 3 * std::hypot(indep.product.se, indep.sum_se));
}
