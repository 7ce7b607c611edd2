#include "ghmm/models/discrete_hmm.hpp"

#include "ghmm/error.hpp"

#include <cmath>

namespace ghmm {

AffineHmm::AffineHmm(Mat P0, Mat B0, std::vector<Param> params, std::string family)
    : P0_(std::move(P0)), B0_(std::move(B0)), params_(std::move(params)), family_(std::move(family)) {
  if (P0_.rows() != P0_.cols() || B0_.rows() != P0_.rows() || P0_.rows() == 0 || B0_.cols() == 0)
    throw Error(Errc::DimensionMismatch, "transition must be D×D and emission D×A");
  for (auto& p : params_) {
    if (p.dP.size() == 0) p.dP = Mat::Zero(P0_.rows(), P0_.cols());
    if (p.dB.size() == 0) p.dB = Mat::Zero(B0_.rows(), B0_.cols());
    if (p.dP.rows() != P0_.rows() || p.dP.cols() != P0_.cols() || p.dB.rows() != B0_.rows() ||
        p.dB.cols() != B0_.cols())
      throw Error(Errc::DimensionMismatch, "parameter direction " + p.name + " has the wrong shape");
  }
}

std::vector<std::string> AffineHmm::param_names() const {
  std::vector<std::string> out;
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

void AffineHmm::validate(const Vec& theta) const {
  check_dim(theta);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    const double v = theta(static_cast<Eigen::Index>(i));
    if (!std::isfinite(v) || !(v > p.lo && v < p.hi))
      throw Error(Errc::InvalidParameter,
                  p.name + " = " + std::to_string(v) + " is outside (" + std::to_string(p.lo) + ", " +
                      std::to_string(p.hi) + ")",
                  "model." + p.name);
  }
}

void AffineHmm::fill(const Vec& theta, FiniteTables& t) const {
  t.P[0] = P0_;
  t.B[0] = B0_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const double v = theta(static_cast<Eigen::Index>(i));
    t.P[0] += v * params_[i].dP;
    t.B[0] += v * params_[i].dB;
    if (t.index->order() == 0) continue;
    t.P[t.index->unit(static_cast<int>(i))] = params_[i].dP;
    t.B[t.index->unit(static_cast<int>(i))] = params_[i].dB;
  }
}

namespace {

bool bounded(const AffineHmm::Param& p) { return std::isfinite(p.lo) && std::isfinite(p.hi); }

}  // namespace

Vec AffineHmm::to_free(const Vec& theta) const {
  Vec u = theta;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (!bounded(p)) continue;
    const double mid = 0.5 * (p.lo + p.hi), half = 0.5 * (p.hi - p.lo);
    u(static_cast<Eigen::Index>(i)) = std::atanh((theta(static_cast<Eigen::Index>(i)) - mid) / half);
  }
  return u;
}

Vec AffineHmm::from_free(const Vec& u) const {
  Vec theta = u;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (!bounded(p)) continue;
    const double mid = 0.5 * (p.lo + p.hi), half = 0.5 * (p.hi - p.lo);
    theta(static_cast<Eigen::Index>(i)) = mid + half * std::tanh(u(static_cast<Eigen::Index>(i)));
  }
  return theta;
}

Mat AffineHmm::free_jacobian(const Vec& u) const {
  Mat J = Mat::Identity(u.size(), u.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (!bounded(p)) continue;
    const double th = std::tanh(u(static_cast<Eigen::Index>(i)));
    J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.5 * (p.hi - p.lo) * (1.0 - th * th);
  }
  return J;
}

std::shared_ptr<AffineHmm> three_state_model() {
  Mat P = Mat::Constant(3, 3, 1.0 / 3.0);
  Mat B(3, 2);
  B << 1.0, 0.0, 0.5, 0.5, 0.0, 1.0;
  AffineHmm::Param delta;
  delta.name = "delta";
  delta.dB = Mat::Zero(3, 2);
  delta.dB(1, 0) = 1.0;
  delta.dB(1, 1) = -1.0;
  delta.lo = -0.5;
  delta.hi = 0.5;
  return std::make_shared<AffineHmm>(P, B, std::vector<AffineHmm::Param>{delta}, "three-state");
}

std::shared_ptr<AffineHmm> fixed_hmm(Mat P, Mat B) {
  return std::make_shared<AffineHmm>(std::move(P), std::move(B), std::vector<AffineHmm::Param>{}, "fixed-hmm");
}

std::vector<int> KOrderEmbedding::decode(int tuple) const {
  std::vector<int> xs(k);
  for (int i = k - 1; i >= 0; --i, tuple /= l) xs[i] = tuple % l;
  return xs;
}

int KOrderEmbedding::encode(const std::vector<int>& xs) const {
  int v = 0;
  for (int x : xs) v = v * l + x;
  return v;
}

KOrderEmbedding embed_korder(int l, int k) {
  if (l < 1 || k < 1) throw Error(Errc::InvalidParameter, "state count and order must be positive");
  long long size = 1;
  for (int i = 0; i < k; ++i) {
    size *= l;
    if (size > 10000) throw Error(Errc::SizeCap, "l^k exceeds 10^4 tuple states");
  }
  return {l, k, static_cast<int>(size)};
}

KOrderHmm::KOrderHmm(int l, int k, int alphabet) : l_(l), A_(alphabet), emb_(embed_korder(l, k)) {
  if (alphabet < 1) throw Error(Errc::InvalidParameter, "alphabet must be non-empty");
}

std::vector<std::string> KOrderHmm::param_names() const {
  std::vector<std::string> out;
  for (int i = 0; i < emb_.size; ++i)
    for (int z = 0; z + 1 < l_; ++z) out.push_back("trans[" + std::to_string(i) + "][" + std::to_string(z) + "]");
  for (int x = 0; x < l_; ++x)
    for (int s = 0; s + 1 < A_; ++s) out.push_back("emit[" + std::to_string(x) + "][" + std::to_string(s) + "]");
  return out;
}

void KOrderHmm::validate(const Vec& theta) const {
  check_dim(theta);
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!std::isfinite(theta(i)))
      throw Error(Errc::InvalidParameter, "non-finite logit", "model.theta[" + std::to_string(i) + "]");
}

namespace {

/// Softmax over n logits where the n-1 free ones start at theta[offset].
Vec softmax_row(const Vec& theta, int offset, int n) {
  Vec s(n);
  for (int z = 0; z + 1 < n; ++z) s(z) = theta(offset + z);
  s(n - 1) = 0.0;
  const double mx = s.maxCoeff();
  Vec p = (s.array() - mx).exp();
  return p / p.sum();
}

double d1(const Vec& p, int z, int j) { return p(z) * ((z == j) - p(j)); }

double d2(const Vec& p, int z, int j, int m) {
  return p(z) * ((z == m) - p(m)) * ((z == j) - p(j)) - p(z) * p(j) * ((j == m) - p(m));
}

}  // namespace

void KOrderHmm::fill(const Vec& theta, FiniteTables& t) const {
  const auto& idx = *t.index;
  const int r = idx.order();
  const int T = transition_params();

  for (int i = 0; i < emb_.size; ++i) {
    const int off = i * (l_ - 1);
    const Vec p = softmax_row(theta, off, l_);
    for (int z = 0; z < l_; ++z) {
      const int to = emb_.successor(i, z);
      t.P[0](i, to) = p(z);
      if (r < 1) continue;
      for (int j = 0; j + 1 < l_; ++j) {
        t.P[idx.unit(off + j)](i, to) = d1(p, z, j);
        if (r < 2) continue;
        for (int m = j; m + 1 < l_; ++m) t.P[idx.pair(off + j, off + m)](i, to) = d2(p, z, j, m);
      }
    }
  }

  for (int x = 0; x < l_; ++x) {
    const int off = T + x * (A_ - 1);
    const Vec p = softmax_row(theta, off, A_);
    for (int i = 0; i < emb_.size; ++i) {
      if (emb_.last(i) != x) continue;
      for (int s = 0; s < A_; ++s) {
        t.B[0](i, s) = p(s);
        if (r < 1) continue;
        for (int j = 0; j + 1 < A_; ++j) {
          t.B[idx.unit(off + j)](i, s) = d1(p, s, j);
          if (r < 2) continue;
          for (int m = j; m + 1 < A_; ++m) t.B[idx.pair(off + j, off + m)](i, s) = d2(p, s, j, m);
        }
      }
    }
  }
}

Vec KOrderHmm::theta_from(const Mat& transition, const Mat& emission) const {
  if (transition.rows() != emb_.size || transition.cols() != l_ || emission.rows() != l_ || emission.cols() != A_)
    throw Error(Errc::DimensionMismatch, "tables have the wrong shape for this k-order model");
  if ((transition.array() <= 0.0).any() || (emission.array() <= 0.0).any())
    throw Error(Errc::InvalidParameter, "softmax parametrization needs strictly positive probabilities");
  Vec theta(param_dim());
  for (int i = 0; i < emb_.size; ++i)
    for (int z = 0; z + 1 < l_; ++z) theta(i * (l_ - 1) + z) = std::log(transition(i, z) / transition(i, l_ - 1));
  const int T = transition_params();
  for (int x = 0; x < l_; ++x)
    for (int s = 0; s + 1 < A_; ++s) theta(T + x * (A_ - 1) + s) = std::log(emission(x, s) / emission(x, A_ - 1));
  return theta;
}

Vec KOrderHmm::default_theta() const {
  Vec theta(param_dim());
  for (int i = 0; i < emb_.size; ++i) {
    const int last = emb_.last(i);
    for (int z = 0; z + 1 < l_; ++z) theta(i * (l_ - 1) + z) = (z == last) - (l_ - 1 == last);
  }
  const int T = transition_params();
  for (int x = 0; x < l_; ++x) {
    const int pref = x * A_ / l_;
    for (int s = 0; s + 1 < A_; ++s) theta(T + x * (A_ - 1) + s) = (s == pref) - (A_ - 1 == pref);
  }
  return theta;
}

std::shared_ptr<KOrderHmm> softmax_hmm(int states, int alphabet) {
  return std::make_shared<KOrderHmm>(states, 1, alphabet);
}

Vec korder_lift(const KOrderHmm& from, const Vec& theta) {
  const int l = from.hidden_states();
  const int A = from.symbols();
  const KOrderHmm to(l, from.order() + 1, A);
  Vec out(to.param_dim());
  const int size = from.embedding().size;
  for (int i2 = 0; i2 < to.embedding().size; ++i2) {
    const int i = i2 % size;
    for (int z = 0; z + 1 < l; ++z) out(i2 * (l - 1) + z) = theta(i * (l - 1) + z);
  }
  out.tail(l * (A - 1)) = theta.tail(l * (A - 1));
  return out;
}

Vec split_last_state(const KOrderHmm& from, const Vec& theta) {
  if (from.order() != 1) throw Error(Errc::InvalidParameter, "state splitting needs a first-order model");
  const int D = from.hidden_states();
  const int A = from.symbols();
  const KOrderHmm to(D + 1, 1, A);
  Vec out(to.param_dim());
  const double ln2 = std::log(2.0);
  for (int i = 0; i <= D; ++i) {
    const int src = i == D ? D - 1 : i;
    for (int j = 0; j < D; ++j) out(i * D + j) = j < D - 1 ? theta(src * (D - 1) + j) + ln2 : 0.0;
  }
  const int T0 = from.transition_params();
  const int T1 = to.transition_params();
  for (int x = 0; x <= D; ++x) {
    const int src = x == D ? D - 1 : x;
    for (int s = 0; s + 1 < A; ++s) out(T1 + x * (A - 1) + s) = theta(T0 + src * (A - 1) + s);
  }
  return out;
}

}  // namespace ghmm
