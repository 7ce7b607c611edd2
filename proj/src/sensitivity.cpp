#include "ghmm/sensitivity.hpp"

#include "ghmm/error.hpp"
#include "ghmm/filter.hpp"

#include <cmath>
#include <limits>

namespace ghmm {

DerivBundle init_sensitivity(const Model& model, const Vec& theta, Obs y0, int r) {
  return model.bind(theta, r)->init_deriv(y0);
}

DerivBundle sensitivity_step(const Model& model, const Vec& theta, const DerivBundle& bundle,
                             Obs y_prev, Obs y_t) {
  DerivBundle next = bundle;
  model.bind(theta, bundle.order)->step_deriv(next, y_prev, y_t);
  return next;
}

Mat step_operator(const FiniteModel& model, const Vec& theta, Obs y_t, int r) {
  const FiniteTables t = model.tables(theta, r);
  const auto& idx = *t.index;
  const int D = t.states;
  const int K = idx.size();
  const int c = symbol(y_t) - 1;
  if (c < 0 || c >= t.symbols) throw Error(Errc::InvalidObservation, "symbol out of range");

  std::vector<Mat> dm(K, Mat::Zero(D, D));
  for (int k = 0; k < K; ++k)
    for (const auto& sp : idx.splits(k)) dm[k] += sp.coeff * t.P[sp.first] * t.B[sp.second].col(c).asDiagonal();

  Mat A = Mat::Zero(K * D, K * D);
  for (int i = 0; i < K; ++i)
    for (const auto& sp : idx.splits(i)) A.block(i * D, sp.first * D, D, D) += sp.coeff * dm[sp.second].transpose();
  return A;
}

void for_each_bundle(const Model& model, const Vec& theta, const Series& y, int r,
                     const std::function<void(std::size_t, const DerivBundle&)>& on_step) {
  if (y.empty()) throw Error(Errc::TooShort, "empty observation sequence");
  if (y.dim() != model.obs_dim())
    throw Error(Errc::DimensionMismatch, "observation dimension does not match the model");
  const auto ev = model.bind(theta, r);
  std::size_t t = 0;
  try {
    DerivBundle b = ev->init_deriv(y[0]);
    on_step(0, b);
    for (t = 1; t < y.size(); ++t) {
      ev->step_deriv(b, y[t - 1], y[t]);
      on_step(t, b);
    }
  } catch (const Error& e) {
    if (e.index()) throw;
    throw e.with_index(t);
  }
}

DerivBundle derivatives(const Model& model, const Vec& theta, const Series& y, int r) {
  DerivBundle last;
  for_each_bundle(model, theta, y, r, [&](std::size_t t, const DerivBundle& b) {
    if (t + 1 == y.size()) last = b;
  });
  return last;
}

Vec bundle_score(const DerivBundle& b) {
  const int q = b.index->params();
  Vec g(q);
  for (int a = 0; a < q; ++a) g(a) = b.dlog(b.index->unit(a));
  return g;
}

Mat bundle_hessian(const DerivBundle& b) {
  const int q = b.index->params();
  Mat h(q, q);
  for (int a = 0; a < q; ++a)
    for (int c = 0; c < q; ++c) h(a, c) = b.dlog(b.index->pair(a, c));
  return h;
}

double bundle_third(const DerivBundle& b, int i, int j, int k) { return b.dlog(b.index->triple(i, j, k)); }

Vec score(const Model& model, const Vec& theta, const Series& y) {
  return bundle_score(derivatives(model, theta, y, 1));
}

HessianResult hessian(const Model& model, const Vec& theta, const Series& y) {
  const Mat h = bundle_hessian(derivatives(model, theta, y, 2));
  const double scale = std::max(h.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double asym = h.size() == 0 ? 0.0 : (h - h.transpose()).cwiseAbs().maxCoeff() / scale;
  return {(h + h.transpose()) / 2.0, asym, asym > 1e-6};
}

std::vector<double> third_derivatives(const Model& model, const Vec& theta, const Series& y) {
  const DerivBundle b = derivatives(model, theta, y, 3);
  const int q = model.param_dim();
  std::vector<double> out(static_cast<std::size_t>(q) * q * q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < q; ++k) out[(static_cast<std::size_t>(i) * q + j) * q + k] = bundle_third(b, i, j, k);
  return out;
}

namespace {

void check_step(const Vec& x, double h) {
  const double eps = std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(h >= 64.0 * eps * std::max(1.0, std::abs(x(i)))))
      throw Error(Errc::StepTooSmall, "finite-difference step below 64 machine epsilons of the coordinate");
}

Vec central(const ScalarFn& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace

Vec fd_gradient(const ScalarFn& f, const Vec& x, double h, bool richardson) {
  check_step(x, h);
  if (!richardson) return central(f, x, h);
  check_step(x, h / 2.0);
  return (4.0 * central(f, x, h / 2.0) - central(f, x, h)) / 3.0;
}

Mat fd_hessian(const ScalarFn& f, const Vec& x, double h) {
  check_step(x, h);
  const Eigen::Index q = x.size();
  Mat H(q, q);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < q; ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
    for (Eigen::Index j = i + 1; j < q; ++j) {
      Vec pp = x, pm = x, mp = x, mm = x;
      pp(i) += h, pp(j) += h;
      pm(i) += h, pm(j) -= h;
      mp(i) -= h, mp(j) += h;
      mm(i) -= h, mm(j) -= h;
      H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
    }
  }
  return H;
}

Vec fd_score(const Model& model, const Vec& theta, const Series& y, double h, bool richardson) {
  return fd_gradient([&](const Vec& th) { return log_likelihood(model, th, y); }, theta, h, richardson);
}

Mat fd_hessian(const Model& model, const Vec& theta, const Series& y, double h) {
  return fd_hessian([&](const Vec& th) { return log_likelihood(model, th, y); }, theta, h);
}

}  // namespace ghmm
