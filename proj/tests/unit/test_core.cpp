#include "helpers.hpp"

#include "ghmm/error.hpp"
#include "ghmm/filter.hpp"
#include "ghmm/models/discrete_hmm.hpp"
#include "ghmm/montecarlo.hpp"
#include "ghmm/multi_index.hpp"

#include <doctest.h>

#include <cmath>

using namespace ghmm;
using namespace testing;

namespace {

Vec d(double v) { return Vec::Constant(1, v); }

std::vector<double> one(int s) { return {static_cast<double>(s)}; }

}  // namespace

TEST_CASE("multi-index set size and order") {
  for (int q = 0; q <= 4; ++q)
    for (int r = 0; r <= 3; ++r) CHECK(MultiIndexSet(q, r).size() == multi_index_count(q, r));
  const MultiIndexSet m(2, 2);
  CHECK(m.parts(0).empty());
  CHECK(m.unit(0) == 1);
  CHECK(m.unit(1) == 2);
  CHECK(m.pair(0, 0) == 3);
  CHECK(m.pair(1, 0) == 4);
  CHECK(m.pair(1, 1) == 5);
  CHECK_THROWS_AS(MultiIndexSet(1, 4), Error);
}

TEST_CASE("init_filter on the three-state example") {
  const auto m = three_state_model();
  const auto y0 = one(1);
  const FilterState s = init_filter(*m, d(0.0), y0);
  CHECK(s.weights(0) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(s.weights(1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(s.weights(2) == 0.0);
  CHECK(s.log_norm == doctest::Approx(std::log(0.5)).epsilon(1e-15));
}

TEST_CASE("constant emission leaves the initial law untouched") {
  Mat P(2, 2);
  P << 0.7, 0.3, 0.4, 0.6;
  Mat B = Mat::Constant(2, 3, 1.0 / 3);
  const auto m = fixed_hmm(P, B);
  const auto y0 = one(2);
  const FilterState s = init_filter(*m, Vec(0), y0);
  CHECK(s.weights(0) == doctest::Approx(4.0 / 7).epsilon(1e-14));
  CHECK(s.weights(1) == doctest::Approx(3.0 / 7).epsilon(1e-14));
}

TEST_CASE("observation with zero emission everywhere") {
  Mat P = Mat::Constant(3, 3, 1.0 / 3);
  Mat B(3, 3);
  B << 0.5, 0.5, 0, 0.5, 0.5, 0, 0.5, 0.5, 0;
  const auto m = fixed_hmm(P, B);
  const auto y0 = one(3);
  try {
    init_filter(*m, Vec(0), y0);
    FAIL("expected AllZeroWeights");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AllZeroWeights);
  }
  try {
    log_likelihood(*m, Vec(0), symbols({1, 2, 3, 1}));
    FAIL("expected AllZeroWeights");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AllZeroWeights);
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 2);
  }
}

TEST_CASE("filter_step on the three-state example") {
  const auto m = three_state_model();
  const auto y0 = one(1), y1 = one(2);
  const FilterState s0 = init_filter(*m, d(0.0), y0);
  const FilterState s1 = filter_step(*m, d(0.0), s0, y0, y1);
  CHECK(s1.weights(0) == 0.0);
  CHECK(s1.weights(1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(s1.weights(2) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(s1.log_norm - s0.log_norm == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(log_likelihood(*m, d(0.0), symbols({1, 2})) == doctest::Approx(-1.3862943611198906).epsilon(1e-14));
}

TEST_CASE("identity transition with constant emission") {
  const auto m = fixed_hmm(Mat::Identity(2, 2), Mat::Constant(2, 4, 0.25));
  m->set_initial_law(Vec::Constant(2, 0.5));
  const auto y = one(3);
  FilterState s = init_filter(*m, Vec(0), y);
  s.weights << 0.2, 0.8;
  const FilterState n = filter_step(*m, Vec(0), s, y, y);
  CHECK(n.weights(0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(n.log_norm - s.log_norm == doctest::Approx(std::log(0.25)).epsilon(1e-15));
}

TEST_CASE("single observation likelihood equals the initial normalizer") {
  const auto m = three_state_model();
  const auto y0 = one(2);
  CHECK(log_likelihood(*m, d(0.1), symbols({2})) == init_filter(*m, d(0.1), y0).log_norm);
}

TEST_CASE("filter matches exhaustive path sums") {
  Rng rng(11);
  for (int rep = 0; rep < 25; ++rep) {
    const int D = 1 + rep % 4, A = 2 + rep % 2;
    const auto m = fixed_hmm(random_stochastic(rng, D, D), random_stochastic(rng, D, A));
    const std::size_t n = 1 + rep % 8;
    const auto ys = random_symbols(rng, A, n + 1);
    const double exact = std::log(exhaustive_likelihood(*m, Vec(0), ys));
    CHECK(log_likelihood(*m, Vec(0), symbols(ys)) == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("filter weights stay normalized and shifts are consistent") {
  Rng rng(5);
  const auto m = fixed_hmm(random_stochastic(rng, 4, 4), random_stochastic(rng, 4, 3));
  const auto ys = symbols(random_symbols(rng, 3, 40));
  const auto inc = log_increments(*m, Vec(0), ys);
  FilterState s = init_filter(*m, Vec(0), ys[0]);
  for (std::size_t t = 1; t < ys.size(); ++t) {
    const double before = s.log_norm;
    s = filter_step(*m, Vec(0), s, ys[t - 1], ys[t]);
    CHECK(s.last == inc[t]);
    CHECK(s.log_norm == before + inc[t]);
    CHECK(std::abs(s.weights.sum() - 1.0) < 1e-12);
    CHECK((s.weights.array() >= 0.0).all());
  }
  for (std::size_t t = 1; t < ys.size(); ++t)
    CHECK(log_likelihood(*m, Vec(0), ys.head(t + 1)) == log_likelihood(*m, Vec(0), ys.head(t)) + inc[t]);
}

TEST_CASE("filter output ignores positive rescaling of the weights") {
  Rng rng(8);
  const auto m = fixed_hmm(random_stochastic(rng, 3, 3), random_stochastic(rng, 3, 2));
  const auto ys = symbols(random_symbols(rng, 2, 10));
  FilterState a = init_filter(*m, Vec(0), ys[0]);
  FilterState b = a;
  b.weights *= 1234.5;
  for (std::size_t t = 1; t < ys.size(); ++t) {
    const double da = filter_step(*m, Vec(0), a, ys[t - 1], ys[t]).log_norm - a.log_norm;
    const FilterState na = filter_step(*m, Vec(0), a, ys[t - 1], ys[t]);
    const FilterState nb = filter_step(*m, Vec(0), b, ys[t - 1], ys[t]);
    CHECK((na.weights - nb.weights).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs((nb.log_norm - b.log_norm) - da) < 1e-14);
    a = na;
    b = nb;
    b.weights *= 0.01;
  }
}

TEST_CASE("stationary law of a finite model") {
  const auto m = three_state_model();
  const FiniteTables t = m->tables(d(0.0), 0);
  for (int i = 0; i < 3; ++i) CHECK(t.init[0](i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  Mat P(2, 2);
  P << 0.9, 0.1, 0.3, 0.7;
  const FiniteTables u = fixed_hmm(P, Mat::Constant(2, 2, 0.5))->tables(Vec(0), 0);
  CHECK(u.init[0](0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(std::abs(u.init[0].sum() - 1.0) < 1e-12);
}

TEST_CASE("error classes") {
  CHECK(is_validation(Errc::NonstationaryParameters));
  CHECK(is_validation(Errc::InvalidConfig));
  CHECK_FALSE(is_validation(Errc::AllZeroWeights));
  CHECK_FALSE(is_validation(Errc::RiccatiNoConvergence));
  const Error e = Error(Errc::NonFinite, "bad").with_index(4);
  CHECK(e.index() == std::optional<std::size_t>(4));
}

TEST_CASE("random streams") {
  Rng a(3), b(3);
  for (int i = 0; i < 5; ++i) CHECK(a.next() == b.next());
  Rng c = Rng(3).split(1), e = Rng(3).split(1), f = Rng(3).split(2);
  const auto x = c.next();
  CHECK(x == e.next());
  CHECK(x != f.next());
  Rng g(9);
  double s = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = g.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
  }
  CHECK(s / 20000 == doctest::Approx(0.5).epsilon(0.02));
}
