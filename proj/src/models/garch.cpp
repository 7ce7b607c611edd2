#include "ghmm/models/garch.hpp"

#include "ghmm/error.hpp"
#include "ghmm/montecarlo.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace ghmm {

namespace {

constexpr int kDelta = 0, kAlpha = 1, kBeta = 2;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

class GarchEvaluator final : public Evaluator {
 public:
  GarchEvaluator(const Vec& theta, std::optional<double> s0, int order)
      : Evaluator(order), d_(theta(0)), a_(theta(1)), b_(theta(2)), fixed_(s0.has_value()) {
    const double g = 1.0 / (1.0 - a_ - b_);
    s0_ = fixed_ ? *s0 : d_ * g;
    ds0_.fill(0.0);
    dds0_.fill(0.0);
    if (!fixed_) {
      ds0_ = {g, d_ * g * g, d_ * g * g};
      // Second derivatives in pair order (δδ, δα, δβ, αα, αβ, ββ).
      dds0_ = {0.0, g * g, g * g, 2 * d_ * g * g * g, 2 * d_ * g * g * g, 2 * d_ * g * g * g};
    }
    if (order > 0) index_ = std::make_shared<MultiIndexSet>(3, order);
  }

  FilterState init(Obs y0) const override {
    const double l = loglik(y0[0], s0_);
    return {Vec::Constant(1, s0_), l, 0, l};
  }

  void step(FilterState& st, Obs y_prev, Obs y_t) const override {
    const double u = d_ + a_ * y_prev[0] * y_prev[0] + b_ * st.weights(0);
    st.weights(0) = u;
    st.last = loglik(y_t[0], u);
    st.log_norm += st.last;
    ++st.t;
  }

  DerivBundle init_deriv(Obs y0) const override {
    DerivBundle bd;
    bd.order = order();
    bd.index = index_;
    bd.w.assign(index_->size(), Vec::Zero(1));
    bd.w[0](0) = s0_;
    if (order() >= 1)
      for (int a = 0; a < 3; ++a) bd.w[index_->unit(a)](0) = ds0_[a];
    if (order() >= 2) {
      int j = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) bd.w[index_->pair(a, b)](0) = dds0_[j++];
    }
    bd.dlog = Vec::Zero(index_->size());
    bd.base = {bd.w[0], 0.0, 0};
    accumulate(bd, y0[0]);
    return bd;
  }

  void step_deriv(DerivBundle& bd, Obs y_prev, Obs y_t) const override {
    const double yp2 = y_prev[0] * y_prev[0];
    const double prev = bd.w[0](0);
    const std::array<double, 3> e = {1.0, yp2, prev};
    std::array<double, 3> s{};
    if (order() >= 1)
      for (int a = 0; a < 3; ++a) s[a] = bd.w[index_->unit(a)](0);
    if (order() >= 2) {
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
          double& h = bd.w[index_->pair(a, b)](0);
          h = b_ * h + (a == kBeta ? s[b] : 0.0) + (b == kBeta ? s[a] : 0.0);
        }
    }
    if (order() >= 1)
      for (int a = 0; a < 3; ++a) bd.w[index_->unit(a)](0) = e[a] + b_ * s[a];
    bd.w[0](0) = d_ + a_ * yp2 + b_ * prev;
    ++bd.base.t;
    accumulate(bd, y_t[0]);
  }

 private:
  static double loglik(double y, double u) {
    const double v = -kHalfLog2Pi - 0.5 * std::log(u) - y * y / (2.0 * u);
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "non-finite GARCH log-density");
    return v;
  }

  void accumulate(DerivBundle& bd, double y) const {
    const double u = bd.w[0](0);
    const double y2 = y * y;
    const double A = -0.5 * (1.0 / u - y2 / (u * u));
    const double B = 0.5 * (1.0 / (u * u) - 2.0 * y2 / (u * u * u));
    const double l = loglik(y, u);
    bd.base.weights = bd.w[0];
    bd.base.last = l;
    bd.base.log_norm += l;
    bd.dlog(0) += l;
    if (order() >= 1)
      for (int a = 0; a < 3; ++a) bd.dlog(index_->unit(a)) += A * bd.w[index_->unit(a)](0);
    if (order() >= 2)
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b)
          bd.dlog(index_->pair(a, b)) += B * bd.w[index_->unit(a)](0) * bd.w[index_->unit(b)](0) +
                                         A * bd.w[index_->pair(a, b)](0);
  }

  double d_, a_, b_;
  bool fixed_;
  double s0_;
  std::array<double, 3> ds0_;
  std::array<double, 6> dds0_;
  std::shared_ptr<const MultiIndexSet> index_ = std::make_shared<MultiIndexSet>(3, 0);
};

}  // namespace

Garch11::Garch11(std::optional<double> sigma0_sq) : sigma0_sq_(sigma0_sq) {
  if (sigma0_sq_ && !(*sigma0_sq_ > 0.0 && std::isfinite(*sigma0_sq_)))
    throw Error(Errc::InvalidParameter, "initial variance must be positive", "model.sigma0_sq");
}

void Garch11::validate(const Vec& theta) const {
  check_dim(theta);
  const double d = theta(kDelta), a = theta(kAlpha), b = theta(kBeta);
  if (!(d > 0.0) || !std::isfinite(d)) throw Error(Errc::InvalidParameter, "delta must be positive", "model.delta");
  if (!(a >= 0.0) || !std::isfinite(a))
    throw Error(Errc::InvalidParameter, "alpha must be non-negative", "model.alpha");
  if (!(b >= 0.0) || !std::isfinite(b))
    throw Error(Errc::InvalidParameter, "beta must be non-negative", "model.beta");
  if (!(a + b < 1.0))
    throw Error(Errc::NonstationaryParameters, "alpha + beta must be below 1", "model.beta");
}

std::unique_ptr<Evaluator> Garch11::bind(const Vec& theta, int order) const {
  check_order(order);
  validate(theta);
  return std::make_unique<GarchEvaluator>(theta, sigma0_sq_, order);
}

void Garch11::simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int>, Trajectory& out) const {
  validate(theta);
  const double d = theta(kDelta), a = theta(kAlpha), b = theta(kBeta);
  double s2 = sigma0_sq_ ? *sigma0_sq_ : d / (1.0 - a - b);
  double y = 0.0;
  out.y.reserve(out.y.size() + n);
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) s2 = d + a * y * y + b * s2;
    y = std::sqrt(s2) * rng.normal();
    out.y.push_back(y);
  }
}

std::vector<double> Garch11::variances(const Vec& theta, const Series& y) const {
  validate(theta);
  const double d = theta(kDelta), a = theta(kAlpha), b = theta(kBeta);
  std::vector<double> out;
  double s2 = sigma0_sq_ ? *sigma0_sq_ : d / (1.0 - a - b);
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t > 0) s2 = d + a * y.at(t - 1) * y.at(t - 1) + b * s2;
    out.push_back(s2);
  }
  return out;
}

Vec Garch11::to_free(const Vec& theta) const {
  constexpr double floor = 1e-12;
  const double a = std::max(theta(kAlpha), floor), b = std::max(theta(kBeta), floor);
  const double c = std::max(1.0 - theta(kAlpha) - theta(kBeta), floor);
  Vec u(3);
  u << std::log(theta(kDelta)), std::log(a / c), std::log(b / c);
  return u;
}

Vec Garch11::from_free(const Vec& u) const {
  const double m = std::max({u(1), u(2), 0.0});
  const double e1 = std::exp(u(1) - m), e2 = std::exp(u(2) - m), e0 = std::exp(-m);
  const double s = e0 + e1 + e2;
  Vec th(3);
  th << std::exp(u(0)), e1 / s, e2 / s;
  return th;
}

Mat Garch11::free_jacobian(const Vec& u) const {
  const Vec th = from_free(u);
  const double a = th(kAlpha), b = th(kBeta);
  Mat J = Mat::Zero(3, 3);
  J(0, 0) = th(kDelta);
  J(1, 1) = a * (1.0 - a);
  J(1, 2) = -a * b;
  J(2, 1) = -a * b;
  J(2, 2) = b * (1.0 - b);
  return J;
}

SeriesEstimate garch_fisher_series(const Vec& theta, std::size_t n, std::uint64_t seed) {
  Garch11 model;
  model.validate(theta);
  const double d = theta(kDelta), a = theta(kAlpha), b = theta(kBeta);
  int L = 1;
  for (double p = b; L < 100000 && p >= 1e-12; p *= b) ++L;
  const std::size_t warm = std::max<std::size_t>(n / 10, static_cast<std::size_t>(L));

  Rng rng(seed);
  std::vector<double> s2(warm + n);
  double y = 0.0;
  for (std::size_t t = 0; t < s2.size(); ++t) {
    s2[t] = t == 0 ? d / (1.0 - a - b) : d + a * y * y + b * s2[t - 1];
    y = std::sqrt(s2[t]) * rng.normal();
  }

  BatchAccumulator acc(n, 1);
  for (std::size_t t = warm; t < warm + n; ++t) {
    double S = 0.0, w = 1.0;
    for (int k = 1; k <= L; ++k, w *= b) S += w * s2[t - k];
    const double v = S * S / (2.0 * s2[t] * s2[t]);
    acc.add(&v);
  }
  return {acc.mean()(0), acc.se()(0), n, seed, L};
}

std::vector<LinearRnnStep> linear_rnn_path(const Vec& theta, const Series& y, double x0) {
  Garch11().validate(theta);
  const double d = theta(kDelta), a = theta(kAlpha), b = theta(kBeta);
  std::vector<LinearRnnStep> out;
  out.push_back({0.0, 0.0, x0});
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double prev = out.back().x;
    const double eta = y.at(t - 1) * y.at(t - 1) / prev;
    const double tau = b + a * eta;
    out.push_back({eta, tau, d + tau * prev});
  }
  return out;
}

}  // namespace ghmm
