#include "ghmm/finite_model.hpp"

#include "ghmm/error.hpp"

#include <cmath>

namespace ghmm {

namespace {

constexpr double kStochasticTol = 1e-12;

int checked_column(Obs y, int symbols) {
  const double v = y[0];
  const int s = static_cast<int>(v);
  if (!(v == static_cast<double>(s)) || s < 1 || s > symbols)
    throw Error(Errc::InvalidObservation,
                "symbol must be an integer in 1.." + std::to_string(symbols));
  return s - 1;
}

void finish(double s, const char* where) {
  if (!std::isfinite(s)) throw Error(Errc::NonFinite, std::string("non-finite normalizer in ") + where);
  if (s <= 0.0)
    throw Error(Errc::AllZeroWeights, std::string("observation has zero probability in ") + where);
}

class FiniteEvaluator final : public Evaluator {
 public:
  FiniteEvaluator(FiniteTables tables, int order) : Evaluator(order), t_(std::move(tables)) {}

  FilterState init(Obs y0) const override {
    const int c = checked_column(y0, t_.symbols);
    Vec v = t_.init[0].cwiseProduct(t_.B[0].col(c));
    const double s = v.sum();
    finish(s, "init_filter");
    return {v / s, std::log(s), 0, std::log(s)};
  }

  void step(FilterState& st, Obs, Obs y) const override {
    const int c = checked_column(y, t_.symbols);
    const double in = st.weights.sum();
    Vec v = (t_.P[0].transpose() * (st.weights / in)).cwiseProduct(t_.B[0].col(c));
    const double s = v.sum();
    finish(s, "filter_step");
    st.weights = v / s;
    st.last = std::log(s);
    st.log_norm += st.last;
    ++st.t;
  }

  DerivBundle init_deriv(Obs y0) const override {
    const int c = checked_column(y0, t_.symbols);
    const auto& idx = *t_.index;
    DerivBundle b;
    b.order = order();
    b.index = t_.index;
    b.w.assign(idx.size(), Vec::Zero(t_.states));
    for (int k = 0; k < idx.size(); ++k)
      for (const auto& sp : idx.splits(k))
        b.w[k] += sp.coeff * t_.init[sp.first].cwiseProduct(t_.B[sp.second].col(c));
    const double s = b.w[0].sum();
    finish(s, "init_sensitivity");
    for (auto& v : b.w) v /= s;
    b.base = {b.w[0], std::log(s), 0, std::log(s)};
    b.dlog = moments(b);
    return b;
  }

  void step_deriv(DerivBundle& b, Obs, Obs y) const override {
    const int c = checked_column(y, t_.symbols);
    const auto& idx = *t_.index;
    const int K = idx.size();
    const int D = t_.states;

    const double in = b.w[0].sum();
    std::vector<Vec> next(K, Vec::Zero(D));
    Vec T(D);
    for (const auto& g : idx.leibniz3()) {
      const Vec& wh = b.w[g.h];
      if (g.p == 0) {
        T.noalias() = t_.P[0].transpose() * wh;
      } else {
        const auto& rows = t_.p_rows[g.p];
        if (rows.empty()) continue;
        T.setZero();
        for (int i : rows)
          if (wh(i) != 0.0) T += wh(i) * t_.P[g.p].row(i).transpose();
      }
      for (const auto& term : g.terms) {
        if (term.f == 0) {
          next[term.target] += term.coeff * T.cwiseProduct(t_.B[0].col(c));
        } else {
          for (int x : t_.b_rows[term.f]) next[term.target](x) += term.coeff * t_.B[term.f](x, c) * T(x);
        }
      }
    }
    const double s = next[0].sum() / in;
    finish(s, "sensitivity_step");
    const double scale = 1.0 / (s * in);
    for (auto& v : next) v *= scale;
    b.w = std::move(next);
    b.base.weights = b.w[0];
    b.base.last = std::log(s);
    b.base.log_norm += b.base.last;
    ++b.base.t;
    b.dlog = moments(b);
  }

  const FiniteTables& tables() const { return t_; }

 private:
  Vec moments(const DerivBundle& b) const {
    Vec m(b.w.size());
    for (std::size_t k = 0; k < b.w.size(); ++k) m(static_cast<Eigen::Index>(k)) = b.w[k].sum();
    return log_derivatives(*t_.index, m, b.base.log_norm);
  }

  FiniteTables t_;
};

}  // namespace

void FiniteTables::compute_sparsity() {
  const int K = index->size();
  p_rows.assign(K, {});
  b_rows.assign(K, {});
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < states; ++i) {
      if ((P[k].row(i).array() != 0.0).any()) p_rows[k].push_back(i);
      if ((B[k].row(i).array() != 0.0).any()) b_rows[k].push_back(i);
    }
  }
}

FiniteTables FiniteModel::tables(const Vec& theta, int order) const {
  check_dim(theta);
  check_order(order);
  validate(theta);

  FiniteTables t;
  t.states = states();
  t.symbols = symbols();
  t.index = std::make_shared<MultiIndexSet>(param_dim(), order);
  const int K = t.index->size();
  t.P.assign(K, Mat::Zero(t.states, t.states));
  t.B.assign(K, Mat::Zero(t.states, t.symbols));
  fill(theta, t);

  for (int i = 0; i < t.states; ++i) {
    if ((t.P[0].row(i).array() < 0.0).any() || std::abs(t.P[0].row(i).sum() - 1.0) > kStochasticTol)
      throw Error(Errc::InvalidStochasticMatrix, "transition row " + std::to_string(i) + " is not stochastic");
    if ((t.B[0].row(i).array() < 0.0).any() || std::abs(t.B[0].row(i).sum() - 1.0) > kStochasticTol)
      throw Error(Errc::InvalidStochasticMatrix, "emission row " + std::to_string(i) + " is not stochastic");
  }

  if (initial_) {
    t.init.assign(K, Vec::Zero(t.states));
    t.init[0] = *initial_;
  } else {
    t.init = stationary_derivatives(t.P, *t.index);
  }
  t.compute_sparsity();
  return t;
}

std::unique_ptr<Evaluator> FiniteModel::bind(const Vec& theta, int order) const {
  return std::make_unique<FiniteEvaluator>(tables(theta, order), order);
}

void FiniteModel::simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int> x0,
                                Trajectory& out) const {
  const FiniteTables t = tables(theta, 0);
  const int D = t.states;
  const int A = t.symbols;
  Mat pc(D, D), bc(D, A);
  for (int i = 0; i < D; ++i) {
    double acc = 0.0;
    for (int j = 0; j < D; ++j) pc(i, j) = acc += t.P[0](i, j);
    acc = 0.0;
    for (int j = 0; j < A; ++j) bc(i, j) = acc += t.B[0](i, j);
  }
  // Row-major copies so categorical() can scan contiguous memory.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pr = pc, br = bc;
  Vec ic(D);
  double acc = 0.0;
  for (int i = 0; i < D; ++i) ic(i) = acc += t.init[0](i);

  if (x0 && (*x0 < 0 || *x0 >= D))
    throw Error(Errc::InvalidParameter, "initial state out of range", "estimator.x0");

  out.y.reserve(out.y.size() + n);
  int x = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (s == 0)
      x = x0 ? *x0 : rng.categorical(ic.data(), D);
    else
      x = rng.categorical(pr.row(x).data(), D);
    const int y = rng.categorical(br.row(x).data(), A);
    out.x.push_back(x);
    out.y.push_back(static_cast<double>(y + 1));
  }
}

void FiniteModel::set_initial_law(std::optional<Vec> nu) {
  if (nu) {
    if (nu->size() != states())
      throw Error(Errc::DimensionMismatch, "initial law has wrong length", "model.initial");
    if ((nu->array() < 0.0).any() || std::abs(nu->sum() - 1.0) > kStochasticTol)
      throw Error(Errc::InvalidStochasticMatrix, "initial law must be a probability vector", "model.initial");
  }
  initial_ = std::move(nu);
}

std::vector<Vec> stationary_derivatives(const std::vector<Mat>& P, const MultiIndexSet& index) {
  const Eigen::Index D = P[0].rows();
  const Mat M = Mat::Identity(D, D) - P[0] + Mat::Ones(D, D);
  Eigen::FullPivLU<Mat> lu(M);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw Error(Errc::InvalidStochasticMatrix, "transition matrix has no unique stationary law");
  // Row-vector solves x M = r are done as Mᵀ xᵀ = rᵀ.
  Eigen::FullPivLU<Mat> lut(M.transpose());

  std::vector<Vec> pi(index.size(), Vec::Zero(D));
  pi[0] = lut.solve(Vec::Ones(D));
  pi[0] = pi[0].cwiseMax(0.0);
  pi[0] /= pi[0].sum();
  for (int k = 1; k < index.size(); ++k) {
    Vec rhs = Vec::Zero(D);
    for (const auto& sp : index.splits(k))
      if (sp.second != 0) rhs += sp.coeff * (P[sp.second].transpose() * pi[sp.first]);
    pi[k] = lut.solve(rhs);
  }
  return pi;
}

void softmax_derivatives(const Vec& p, const std::vector<Vec>& s1, const std::vector<Vec>* s2,
                         std::vector<Vec>& p1, std::vector<Vec>* p2) {
  const std::size_t q = s1.size();
  std::vector<Vec> u1(q);
  p1.resize(q);
  for (std::size_t a = 0; a < q; ++a) {
    u1[a] = s1[a].array() - p.dot(s1[a]);
    p1[a] = p.cwiseProduct(u1[a]);
  }
  if (!s2 || !p2) return;
  p2->resize(q * (q + 1) / 2);
  std::size_t j = 0;
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = a; b < q; ++b, ++j) {
      const Vec& s = (*s2)[j];
      const double cross = (p.array() * u1[a].array() * u1[b].array()).sum();
      Vec u2 = s.array() - p.dot(s) - cross;
      (*p2)[j] = p.cwiseProduct(u2 + u1[a].cwiseProduct(u1[b]));
    }
  }
}

Vec log_derivatives(const MultiIndexSet& index, const Vec& m, double log_norm) {
  Vec d(index.size());
  d(0) = log_norm;
  for (int k = 1; k < index.size(); ++k) {
    const auto& nu = index.parts(k);
    switch (nu.size()) {
      case 1:
        d(k) = m(k);
        break;
      case 2:
        d(k) = m(k) - m(index.unit(nu[0])) * m(index.unit(nu[1]));
        break;
      default: {
        const int a = nu[0], b = nu[1], c = nu[2];
        const double ma = m(index.unit(a)), mb = m(index.unit(b)), mc = m(index.unit(c));
        d(k) = m(k) - m(index.pair(a, b)) * mc - m(index.pair(a, c)) * mb - m(index.pair(b, c)) * ma +
               2.0 * ma * mb * mc;
      }
    }
  }
  return d;
}

}  // namespace ghmm
