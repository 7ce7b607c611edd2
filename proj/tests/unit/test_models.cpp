#include "helpers.hpp"

#include "ghmm/error.hpp"
#include "ghmm/filter.hpp"
#include "ghmm/models/discrete_hmm.hpp"
#include "ghmm/models/garch.hpp"
#include "ghmm/models/lssm.hpp"
#include "ghmm/models/trbm.hpp"
#include "ghmm/montecarlo.hpp"
#include "ghmm/sensitivity.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ghmm;
using namespace testing;

namespace {

Vec d(double v) { return Vec::Constant(1, v); }

Vec garch_theta(double dl, double a, double b) {
  Vec th(3);
  th << dl, a, b;
  return th;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidConfig;
}

// Central differences of every table entry against the analytic first and
// second derivatives produced by fill().
void check_table_derivatives(const FiniteModel& m, const Vec& th, double tol) {
  const FiniteTables t = m.tables(th, 2);
  const double h = 1e-5;
  for (int a = 0; a < m.param_dim(); ++a) {
    Vec tp = th, tm = th;
    tp(a) += h;
    tm(a) -= h;
    const FiniteTables p = m.tables(tp, 1), q = m.tables(tm, 1);
    const Mat dP = (p.P[0] - q.P[0]) / (2 * h), dB = (p.B[0] - q.B[0]) / (2 * h);
    CHECK(rel_err(t.P[t.index->unit(a)], dP) < tol);
    CHECK(rel_err(t.B[t.index->unit(a)], dB) < tol);
    for (int b = 0; b < m.param_dim(); ++b) {
      const Mat ddP = (p.P[p.index->unit(b)] - q.P[q.index->unit(b)]) / (2 * h);
      const Mat ddB = (p.B[p.index->unit(b)] - q.B[q.index->unit(b)]) / (2 * h);
      CHECK(rel_err(t.P[t.index->pair(a, b)], ddP) < tol);
      CHECK(rel_err(t.B[t.index->pair(a, b)], ddB) < tol);
    }
  }
}

}  // namespace

TEST_CASE("three-state example: marginal and admissible range") {
  const auto m = three_state_model();
  const FiniteTables t = m->tables(d(0.0), 0);
  CHECK(t.init[0].dot(t.B[0].col(0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(code_of([&] { m->validate(d(0.5)); }) == Errc::InvalidParameter);
  CHECK(code_of([&] { m->validate(d(-0.5)); }) == Errc::InvalidParameter);
  CHECK_NOTHROW(m->validate(d(0.49)));
  const Vec u = m->to_free(d(0.2));
  CHECK(m->from_free(u)(0) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("non-stochastic affine tables are rejected") {
  Mat P(2, 2), B(2, 2);
  P << 0.5, 0.6, 0.5, 0.5;
  B << 1, 0, 0, 1;
  CHECK(code_of([&] { fixed_hmm(P, B)->tables(Vec(0), 0); }) == Errc::InvalidStochasticMatrix);
}

TEST_CASE("k-order embedding") {
  const KOrderEmbedding e1 = embed_korder(2, 1);
  CHECK(e1.size == 2);
  CHECK(e1.successor(0, 1) == 1);
  CHECK(e1.successor(1, 0) == 0);
  const KOrderEmbedding e2 = embed_korder(2, 2);
  CHECK(e2.size == 4);
  for (int from = 0; from < 4; ++from) {
    int count = 0;
    for (int to = 0; to < 4; ++to) count += e2.admissible(from, to) ? 1 : 0;
    CHECK(count == 2);
  }
  CHECK(e2.decode(e2.encode({1, 0})) == std::vector<int>{1, 0});
  CHECK(e1.free_params() == 2);
  CHECK(e2.free_params() == 4);
  CHECK(code_of([] { embed_korder(10, 5); }) == Errc::SizeCap);
  CHECK_NOTHROW(embed_korder(10, 4));
}

TEST_CASE("k-order model tables and derivatives") {
  Rng rng(2);
  for (int k = 1; k <= 2; ++k) {
    const KOrderHmm m(2, k, 3);
    const Vec th = random_vec(rng, m.param_dim());
    const FiniteTables t = m.tables(th, 0);
    for (int i = 0; i < t.states; ++i) {
      CHECK(std::abs(t.P[0].row(i).sum() - 1.0) < 1e-12);
      for (int j = 0; j < t.states; ++j)
        if (!m.embedding().admissible(i, j)) CHECK(t.P[0](i, j) == 0.0);
    }
    check_table_derivatives(m, th, 1e-6);
  }
}

TEST_CASE("lifting and splitting keep the likelihood") {
  Rng rng(12);
  const auto ys = symbols(random_symbols(rng, 3, 60));
  const KOrderHmm m1(2, 1, 3);
  const Vec th = random_vec(rng, m1.param_dim());
  const double ll = log_likelihood(m1, th, ys);
  const KOrderHmm m2(2, 2, 3);
  CHECK(log_likelihood(m2, korder_lift(m1, th), ys) == doctest::Approx(ll).epsilon(1e-10));
  const KOrderHmm m3(3, 1, 3);
  CHECK(log_likelihood(m3, split_last_state(m1, th), ys) == doctest::Approx(ll).epsilon(1e-10));
  Mat T(2, 2), E(2, 3);
  T << 0.8, 0.2, 0.3, 0.7;
  E << 0.5, 0.3, 0.2, 0.1, 0.1, 0.8;
  const FiniteTables t = m1.tables(m1.theta_from(T, E), 0);
  CHECK(rel_err(t.P[0], T) < 1e-14);
  CHECK(rel_err(t.B[0], E) < 1e-14);
}

TEST_CASE("single-state model") {
  const KOrderHmm m(1, 1, 3);
  CHECK(m.param_dim() == 2);
  const Vec th = m.default_theta();
  const FiniteTables t = m.tables(th, 1);
  CHECK(t.P[0](0, 0) == 1.0);
}

TEST_CASE("garch recursion") {
  const Garch11 g(1.0);
  const Vec th = garch_theta(0.1, 0.2, 0.7);
  Series y(1);
  y.push_back(0.5);
  y.push_back(0.0);
  const auto v = g.variances(th, y);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == doctest::Approx(0.85).epsilon(1e-15));
  // With a fixed σ0², ∂σ1²/∂β = σ0².
  const auto ev = g.bind(th, 1);
  DerivBundle b = ev->init_deriv(y[0]);
  ev->step_deriv(b, y[0], y[1]);
  CHECK(b.w[b.index->unit(2)](0) == doctest::Approx(1.0).epsilon(1e-15));
  const Garch11 stat;
  CHECK(stat.variances(th, y)[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("garch validation") {
  const Garch11 g;
  CHECK(code_of([&] { g.validate(garch_theta(0.1, 0.3, 0.7)); }) == Errc::NonstationaryParameters);
  try {
    g.validate(garch_theta(0.1, 0.5, 0.6));
  } catch (const Error& e) {
    CHECK(e.field() == "model.beta");
  }
  CHECK(code_of([&] { g.validate(garch_theta(0.0, 0.3, 0.6)); }) == Errc::InvalidParameter);
  const Vec th = garch_theta(0.1, 0.2, 0.7);
  const Vec back = g.from_free(g.to_free(th));
  CHECK((back - th).cwiseAbs().maxCoeff() < 1e-14);
  const Vec u = g.to_free(th);
  const Mat J = g.free_jacobian(u);
  for (int j = 0; j < 3; ++j) {
    Vec up = u, um = u;
    up(j) += 1e-6;
    um(j) -= 1e-6;
    const Vec col = (g.from_free(up) - g.from_free(um)) / 2e-6;
    CHECK((J.col(j) - col).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("garch simulation keeps sigma above delta and matches the likelihood") {
  const Garch11 g;
  const Vec th = garch_theta(0.1, 0.2, 0.7);
  const Trajectory tr = simulate(g, th, 2000, 3);
  const auto v = g.variances(th, tr.y);
  double ll = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    CHECK(v[t] >= 0.1);
    ll += -0.5 * std::log(2 * std::numbers::pi * v[t]) - tr.y.at(t) * tr.y.at(t) / (2 * v[t]);
  }
  CHECK(log_likelihood(g, th, tr.y) == doctest::Approx(ll).epsilon(1e-12));
  const auto rnn = linear_rnn_path(th, tr.y, v[0]);
  for (std::size_t t = 0; t < v.size(); ++t) CHECK(rnn[t].x == doctest::Approx(v[t]).epsilon(1e-12));
}

TEST_CASE("garch hessian against finite differences") {
  const Garch11 g;
  const Vec th = garch_theta(0.1, 0.2, 0.7);
  const Trajectory tr = simulate(g, th, 300, 21);
  const HessianResult h = hessian(g, th, tr.y);
  CHECK(rel_err(h.value, fd_hessian(g, th, tr.y, 1e-4)) < 1e-4);
}

TEST_CASE("garch fisher series in the constant-variance case") {
  const SeriesEstimate s = garch_fisher_series(garch_theta(0.3, 0.0, 0.4), 1000, 1);
  CHECK(s.value == doctest::Approx(1.0 / (2 * 0.36)).epsilon(1e-12));
  CHECK(s.se < 1e-12);
  const SeriesEstimate z = garch_fisher_series(garch_theta(0.3, 0.2, 0.0), 1000, 1);
  CHECK(z.terms == 1);
}

TEST_CASE("varma companion form") {
  const LssmSpec ar = varma_to_lssm({Mat::Constant(1, 1, -0.5)}, {}, Mat::Identity(1, 1));
  CHECK(ar.Phi(0, 0) == 0.5);
  CHECK(ar.F(0, 0) == 0.5);
  CHECK(ar.H(0, 0) == 1.0);
  const LssmSpec noise = varma_to_lssm({}, {}, Mat::Identity(2, 2));
  CHECK(noise.state_dim() == 0);
  const LssmSpec arma = varma_to_lssm({Mat::Identity(2, 2) * 0.1}, {Mat::Identity(2, 2) * 0.2}, Mat::Identity(2, 2));
  CHECK(arma.Phi.rows() == 2);
  CHECK(arma.F.rows() == 2);
  CHECK(arma.F.cols() == 2);
  CHECK(rel_err(arma.H, Mat::Identity(2, 2)) == 0.0);
  CHECK(code_of([] { varma_to_lssm({Mat::Identity(2, 2)}, {}, Mat::Identity(1, 1)); }) == Errc::DimensionMismatch);
}

TEST_CASE("kalman filter, scalar model") {
  LssmSpec s{Mat::Constant(1, 1, 0.5), Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0)};
  CHECK(solve_stein(s.Phi, s.F * s.F.transpose())(0, 0) == doctest::Approx(4.0 / 3).epsilon(1e-14));
  Series zeros(1, std::vector<double>(250, 0.0));
  const KalmanResult r = kalman_filter(s, zeros);
  double expect = 0.0;
  for (const Mat& S : r.covariances) expect += -0.5 * std::log(2 * std::numbers::pi) - 0.5 * std::log(S(0, 0));
  CHECK(r.loglik == doctest::Approx(expect).epsilon(1e-13));
  for (std::size_t t = 0; t < zeros.size(); ++t) CHECK(r.innovations.at(t) == 0.0);
  const SteadyState ss = steady_state(s);
  CHECK(std::abs(r.covariances[200](0, 0) - ss.S(0, 0)) < 1e-10);
  CHECK(r.clipped == 0);
}

TEST_CASE("kalman likelihood agrees with the model filter and the dense Gaussian density") {
  const VarmaModel m(1, 1, 1, Mat::Constant(1, 1, 1.5));
  Vec th(2);
  th << -0.6, 0.3;
  const Trajectory tr = simulate(m, th, 6, 4);
  const double ll = kalman_filter(m.spec(th), tr.y).loglik;
  CHECK(log_likelihood(m, th, tr.y) == doctest::Approx(ll).epsilon(1e-12));
  // ARMA(1,1) autocovariances: y_t = a y_{t-1} + e_t + b e_{t-1}, a = 0.6, b = 0.3.
  const double a = 0.6, b = 0.3, s2 = 1.5;
  const double g0 = s2 * (1 + 2 * a * b + b * b) / (1 - a * a);
  const double g1 = s2 * (1 + a * b) * (a + b) / (1 - a * a);
  Mat C(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const int lag = std::abs(i - j);
      C(i, j) = lag == 0 ? g0 : g1 * std::pow(a, lag - 1);
    }
  const Vec y = Eigen::Map<const Vec>(tr.y.values().data(), 6);
  Eigen::LLT<Mat> llt(C);
  const double dense = -3 * std::log(2 * std::numbers::pi) - Mat(llt.matrixL()).diagonal().array().log().sum() -
                       0.5 * y.dot(llt.solve(y));
  CHECK(ll == doctest::Approx(dense).epsilon(1e-10));
}

TEST_CASE("varma derivatives against finite differences") {
  Mat Sig(2, 2);
  Sig << 1.0, 0.3, 0.3, 0.8;
  const VarmaModel m(2, 1, 1, Sig);
  Rng rng(8);
  const Vec th = random_vec(rng, m.param_dim(), 0.2);
  const Trajectory tr = simulate(m, th, 40, 9);
  const Vec an = score(m, th, tr.y), fd = fd_score(m, th, tr.y, 1e-5, true);
  CHECK(rel_err(an, fd) < 1e-6);
  CHECK(rel_err(hessian(m, th, tr.y).value, fd_hessian(m, th, tr.y, 1e-4)) < 1e-4);
}

TEST_CASE("varma validation") {
  const VarmaModel m(1, 1, 0, Mat::Identity(1, 1));
  try {
    m.validate(d(-1.2));
    FAIL("expected NonstationaryParameters");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonstationaryParameters);
    CHECK(e.field() == "model.ar");
  }
  CHECK(code_of([] { VarmaModel(1, 1, 0, Mat::Constant(1, 1, -1.0)); }) == Errc::InvalidParameter);
}

TEST_CASE("matrix jet product rule") {
  // X(θ) = [[θ0, θ1], [0, 1 + θ0 θ1]] at θ = (0.5, 2).
  const int q = 2;
  MatrixJet X(Mat::Zero(2, 2), q, 2);
  X.v << 0.5, 2, 0, 2;
  X.d[0](0, 0) = 1;
  X.d[0](1, 1) = 2;
  X.d[1](0, 1) = 1;
  X.d[1](1, 1) = 0.5;
  X.dd[MatrixJet::pair(0, 1, q)](1, 1) = 1;
  auto value = [](double a, double b) {
    Mat m(2, 2);
    m << a, b, 0, 1 + a * b;
    return m;
  };
  const MatrixJet Y = X * X.inverse() * X;
  const double h = 1e-5;
  const Mat fd01 = (value(0.5 + h, 2 + h) - value(0.5 + h, 2 - h) - value(0.5 - h, 2 + h) + value(0.5 - h, 2 - h)) /
                   (4 * h * h);
  CHECK(rel_err(Y.v, X.v) < 1e-14);
  CHECK(rel_err(Y.dd[MatrixJet::pair(0, 1, q)], fd01) < 1e-5);
  const MatrixJet ld = logdet(X, X.inverse());
  CHECK(ld.v(0, 0) == doctest::Approx(std::log(1.0)).epsilon(1e-14));
  CHECK(ld.d[0](0, 0) == doctest::Approx(2.0 + 2.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("trbm tables") {
  TrbmSpec zero{Mat::Zero(2, 3), Mat::Zero(3, 3), Vec::Zero(2), Vec::Zero(3)};
  const TrbmHmm z = trbm_to_hmm(zero);
  const Mat J = z.model->joint(z.theta, 5);
  CHECK((J.array() - 1.0 / 32).abs().maxCoeff() < 1e-15);

  TrbmSpec one{Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Zero(1), Vec::Constant(1, 30.0)};
  const TrbmHmm o = trbm_to_hmm(one);
  const FiniteTables t = o.model->tables(o.theta, 0);
  CHECK(t.P[0](0, 1) > 1 - 1e-12);
  CHECK(t.P[0](1, 1) > 1 - 1e-12);

  Rng rng(31);
  TrbmSpec s{Mat(2, 2), Mat(2, 2), Vec(2), Vec(2)};
  s.W = Mat::NullaryExpr(2, 2, [&] { return rng.normal(); });
  s.Wp = Mat::NullaryExpr(2, 2, [&] { return rng.normal(); });
  s.bY = random_vec(rng, 2);
  s.bH = random_vec(rng, 2);
  const TrbmHmm r = trbm_to_hmm(s);
  const FiniteTables u = r.model->tables(r.theta, 0);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(u.P[0].row(i).sum() - 1.0) < 1e-12);
    CHECK(std::abs(u.B[0].row(i).sum() - 1.0) < 1e-12);
  }
  // The emission does not depend on h_{t-1}: condition the joint for h_prev = 3.
  const Mat J3 = r.model->joint(r.theta, 3);
  for (int h = 0; h < 4; ++h)
    for (int v = 0; v < 4; ++v) CHECK(J3(v, h) / J3.col(h).sum() == doctest::Approx(u.B[0](h, v)).epsilon(1e-12));
  check_table_derivatives(*r.model, r.theta, 1e-6);

  TrbmSpec big{Mat::Zero(2, 7), Mat::Zero(7, 7), Vec::Zero(2), Vec::Zero(7)};
  CHECK(code_of([&] { trbm_to_hmm(big); }) == Errc::StateSpaceTooLarge);
}
