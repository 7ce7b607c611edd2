#include "ghmm/models/lssm.hpp"

#include "ghmm/error.hpp"
#include "ghmm/montecarlo.hpp"

#include <cmath>
#include <numbers>

namespace ghmm {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

/// Symmetrizes P and clips tiny negative eigenvalues. Returns true when a clip
/// was needed; a clearly indefinite matrix is an error.
bool make_psd(Mat& P) {
  if (P.size() == 0) return false;
  P = (P + P.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  const double lo = es.eigenvalues().minCoeff();
  if (lo >= -1e-10) return false;
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (lo < -1e-6 * scale) throw Error(Errc::NonPsdCovariance, "state covariance is indefinite");
  P = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  return true;
}

Mat sqrt_psd(const Mat& P) {
  if (P.size() == 0) return P;
  Eigen::SelfAdjointEigenSolver<Mat> es((P + P.transpose()) / 2.0);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

LssmSpec varma_to_lssm(const std::vector<Mat>& alphas, const std::vector<Mat>& betas, const Mat& Sigma) {
  const Eigen::Index m = Sigma.rows();
  if (Sigma.cols() != m || m == 0) throw Error(Errc::DimensionMismatch, "noise covariance must be square", "model.sigma");
  for (const auto& a : alphas)
    if (a.rows() != m || a.cols() != m) throw Error(Errc::DimensionMismatch, "AR coefficient is not m×m", "model.ar");
  for (const auto& b : betas)
    if (b.rows() != m || b.cols() != m) throw Error(Errc::DimensionMismatch, "MA coefficient is not m×m", "model.ma");
  const Eigen::Index h = static_cast<Eigen::Index>(std::max(alphas.size(), betas.size()));

  LssmSpec s;
  s.Phi = Mat::Zero(h * m, h * m);
  s.F = Mat::Zero(h * m, m);
  s.H = Mat::Zero(m, h * m);
  s.Sigma = Sigma;
  for (Eigen::Index i = 0; i < h; ++i) {
    const Mat a = i < static_cast<Eigen::Index>(alphas.size()) ? alphas[i] : Mat::Zero(m, m);
    const Mat b = i < static_cast<Eigen::Index>(betas.size()) ? betas[i] : Mat::Zero(m, m);
    s.Phi.block(i * m, 0, m, m) = -a;
    if (i + 1 < h) s.Phi.block(i * m, (i + 1) * m, m, m) = Mat::Identity(m, m);
    s.F.block(i * m, 0, m, m) = b - a;
  }
  if (h > 0) s.H.leftCols(m) = Mat::Identity(m, m);
  return s;
}

Mat solve_stein(const Mat& Phi, const Mat& Q) {
  const Eigen::Index n = Phi.rows();
  if (n == 0) return Mat(0, 0);
  Mat K = Mat::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) -= Phi(i, j) * Phi;
  Eigen::Map<const Vec> q(Q.data(), n * n);
  Vec x = K.partialPivLu().solve(q);
  Mat P = Eigen::Map<Mat>(x.data(), n, n);
  return (P + P.transpose()) / 2.0;
}

KalmanResult kalman_filter(const LssmSpec& s, const Series& y) {
  const Eigen::Index m = s.obs_dim();
  if (static_cast<Eigen::Index>(y.dim()) != m) throw Error(Errc::DimensionMismatch, "observation dimension mismatch");
  KalmanResult r;
  r.innovations = Series(y.dim());
  Vec x = Vec::Zero(s.state_dim());
  Mat P = solve_stein(s.Phi, s.F * s.Sigma * s.F.transpose());
  r.clipped += make_psd(P);
  for (std::size_t t = 0; t < y.size(); ++t) {
    const Vec yt = Eigen::Map<const Vec>(y[t].data(), m);
    const Mat S = s.H * P * s.H.transpose() + s.Sigma;
    const Vec e = yt - s.H * x;
    const Mat G = s.Phi * P * s.H.transpose() + s.F * s.Sigma;
    Eigen::LDLT<Mat> ldlt(S);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
      throw Error(Errc::NonPsdCovariance, "innovation covariance is not positive definite");
    const Mat K = ldlt.solve(G.transpose()).transpose();
    r.loglik += -0.5 * (static_cast<double>(m) * kLog2Pi + ldlt.vectorD().array().log().sum() + e.dot(ldlt.solve(e)));
    x = s.Phi * x + K * e;
    P = s.Phi * P * s.Phi.transpose() + s.F * s.Sigma * s.F.transpose() - K * S * K.transpose();
    r.clipped += make_psd(P);
    r.innovations.push_back(Obs(e.data(), static_cast<std::size_t>(m)));
    r.covariances.push_back(S);
  }
  if (!std::isfinite(r.loglik)) throw Error(Errc::NonFinite, "non-finite Kalman log-likelihood");
  return r;
}

SteadyState steady_state(const LssmSpec& s) {
  Mat P = solve_stein(s.Phi, s.F * s.Sigma * s.F.transpose());
  const Mat Q = s.F * s.Sigma * s.F.transpose();
  for (int it = 1; it <= 100000; ++it) {
    const Mat S = s.H * P * s.H.transpose() + s.Sigma;
    const Mat G = s.Phi * P * s.H.transpose() + s.F * s.Sigma;
    const Mat K = S.ldlt().solve(G.transpose()).transpose();
    Mat next = s.Phi * P * s.Phi.transpose() + Q - K * S * K.transpose();
    next = (next + next.transpose()) / 2.0;
    const double diff = P.size() == 0 ? 0.0 : (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (diff < 1e-12) {
      const Mat S2 = s.H * P * s.H.transpose() + s.Sigma;
      const Mat G2 = s.Phi * P * s.H.transpose() + s.F * s.Sigma;
      return {P, S2, S2.ldlt().solve(G2.transpose()).transpose(), it};
    }
  }
  throw Error(Errc::RiccatiNoConvergence, "Riccati recursion did not converge in 10^5 iterations");
}

// ---------------------------------------------------------------------------

MatrixJet::MatrixJet(Mat value, int q_, int order_) : v(std::move(value)), q(q_), order(order_) {
  if (order >= 1) d.assign(q, Mat::Zero(v.rows(), v.cols()));
  if (order >= 2) dd.assign(pairs(), Mat::Zero(v.rows(), v.cols()));
}

int MatrixJet::pair(int a, int b, int q) {
  if (a > b) std::swap(a, b);
  return a * q - a * (a - 1) / 2 + (b - a);
}

MatrixJet MatrixJet::transpose() const {
  MatrixJet r;
  r.q = q;
  r.order = order;
  r.v = v.transpose();
  for (const auto& m : d) r.d.push_back(m.transpose());
  for (const auto& m : dd) r.dd.push_back(m.transpose());
  return r;
}

MatrixJet MatrixJet::symmetrized() const {
  MatrixJet r = *this;
  r.v = (v + v.transpose()) / 2.0;
  for (auto& m : r.d) m = (m + m.transpose()) / 2.0;
  for (auto& m : r.dd) m = (m + m.transpose()) / 2.0;
  return r;
}

MatrixJet MatrixJet::inverse() const {
  MatrixJet r;
  r.q = q;
  r.order = order;
  Eigen::PartialPivLU<Mat> lu(v);
  r.v = lu.inverse();
  const Mat& V = r.v;
  if (order >= 1)
    for (int a = 0; a < q; ++a) r.d.push_back(-V * d[a] * V);
  if (order >= 2)
    for (int a = 0; a < q; ++a)
      for (int b = a; b < q; ++b)
        r.dd.push_back(V * (d[b] * V * d[a] + d[a] * V * d[b] - dd[pair(a, b, q)]) * V);
  return r;
}

double MatrixJet::max_abs_diff(const MatrixJet& o) const {
  if (v.size() == 0) return 0.0;
  double m = (v - o.v).cwiseAbs().maxCoeff();
  for (std::size_t i = 0; i < d.size(); ++i) m = std::max(m, (d[i] - o.d[i]).cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < dd.size(); ++i) m = std::max(m, (dd[i] - o.dd[i]).cwiseAbs().maxCoeff());
  return m;
}

MatrixJet operator*(const MatrixJet& a, const MatrixJet& b) {
  MatrixJet r;
  r.q = a.q;
  r.order = std::min(a.order, b.order);
  r.v = a.v * b.v;
  if (r.order >= 1)
    for (int i = 0; i < r.q; ++i) r.d.push_back(a.d[i] * b.v + a.v * b.d[i]);
  if (r.order >= 2)
    for (int i = 0; i < r.q; ++i)
      for (int j = i; j < r.q; ++j) {
        const int k = MatrixJet::pair(i, j, r.q);
        r.dd.push_back(a.dd[k] * b.v + a.d[i] * b.d[j] + a.d[j] * b.d[i] + a.v * b.dd[k]);
      }
  return r;
}

namespace {

template <class Op>
MatrixJet combine(const MatrixJet& a, const MatrixJet& b, Op op) {
  MatrixJet r;
  r.q = a.q;
  r.order = std::min(a.order, b.order);
  r.v = op(a.v, b.v);
  for (std::size_t i = 0; r.order >= 1 && i < a.d.size(); ++i) r.d.push_back(op(a.d[i], b.d[i]));
  for (std::size_t i = 0; r.order >= 2 && i < a.dd.size(); ++i) r.dd.push_back(op(a.dd[i], b.dd[i]));
  return r;
}

}  // namespace

MatrixJet operator+(const MatrixJet& a, const MatrixJet& b) {
  return combine(a, b, [](const Mat& x, const Mat& y) -> Mat { return x + y; });
}

MatrixJet operator-(const MatrixJet& a, const MatrixJet& b) {
  return combine(a, b, [](const Mat& x, const Mat& y) -> Mat { return x - y; });
}

MatrixJet operator*(double s, const MatrixJet& a) {
  MatrixJet r = a;
  r.v *= s;
  for (auto& m : r.d) m *= s;
  for (auto& m : r.dd) m *= s;
  return r;
}

MatrixJet logdet(const MatrixJet& S, const MatrixJet& V) {
  MatrixJet r(Mat::Constant(1, 1, std::log(S.v.determinant())), S.q, S.order);
  if (S.order >= 1)
    for (int a = 0; a < S.q; ++a) r.d[a](0, 0) = (V.v * S.d[a]).trace();
  if (S.order >= 2)
    for (int a = 0; a < S.q; ++a)
      for (int b = a; b < S.q; ++b) {
        const int k = MatrixJet::pair(a, b, S.q);
        r.dd[k](0, 0) = (V.v * S.dd[k]).trace() - (V.v * S.d[a] * V.v * S.d[b]).trace();
      }
  return r;
}

MatrixJet solve_stein(const MatrixJet& Phi, const MatrixJet& Q) {
  // Solve order by order: the unknown derivative enters Φ P Φᵀ only through
  // Φ P^{(k)} Φᵀ, so each stage is a Stein equation with a known right side.
  MatrixJet P(solve_stein(Phi.v, Q.v), Phi.q, std::min(Phi.order, Q.order));
  if (P.order >= 1) {
    const MatrixJet T = Phi * P * Phi.transpose();
    for (int a = 0; a < P.q; ++a) P.d[a] = solve_stein(Phi.v, T.d[a] + Q.d[a]);
  }
  if (P.order >= 2) {
    const MatrixJet T = Phi * P * Phi.transpose();
    for (int k = 0; k < P.pairs(); ++k) P.dd[k] = solve_stein(Phi.v, T.dd[k] + Q.dd[k]);
  }
  return P;
}

// ---------------------------------------------------------------------------

namespace {

/// Packs (x̂, P) or one of their derivatives into a flat vector.
Vec pack(const Mat& x, const Mat& P) {
  Vec out(x.size() + P.size());
  out.head(x.size()) = Eigen::Map<const Vec>(x.data(), x.size());
  out.tail(P.size()) = Eigen::Map<const Vec>(P.data(), P.size());
  return out;
}

class KalmanEvaluator final : public Evaluator {
 public:
  KalmanEvaluator(const VarmaModel& model, const Vec& theta, int order)
      : Evaluator(order), q_(order > 0 ? model.param_dim() : 0) {
    const LssmSpec s = model.spec(theta);
    n_ = s.state_dim();
    m_ = s.obs_dim();
    phi_ = model.phi_jet(theta, order);
    F_ = model.f_jet(theta, order);
    H_ = MatrixJet(s.H, q_, order);
    Sigma_ = MatrixJet(s.Sigma, q_, order);
    Q_ = F_ * Sigma_ * F_.transpose();
    FS_ = F_ * Sigma_;
    P0_ = solve_stein(phi_, Q_);
    make_psd(P0_.v);
    index_ = std::make_shared<MultiIndexSet>(q_, order);
  }

  FilterState init(Obs y0) const override {
    DerivBundle b = init_deriv_impl(y0);
    return b.base;
  }

  void step(FilterState& st, Obs, Obs y) const override {
    MatrixJet x(Eigen::Map<const Vec>(st.weights.data(), n_), q_, order());
    MatrixJet P(Eigen::Map<const Mat>(st.weights.data() + n_, n_, n_), q_, order());
    Vec dl = Vec::Zero(index_->size());
    advance(x, P, y, dl);
    st.weights = pack(x.v, P.v);
    st.last = dl(0);
    st.log_norm += st.last;
    ++st.t;
  }

  DerivBundle init_deriv(Obs y0) const override { return init_deriv_impl(y0); }

  void step_deriv(DerivBundle& b, Obs, Obs y) const override {
    MatrixJet x, P;
    unpack(b, x, P);
    const double before = b.dlog(0);
    advance(x, P, y, b.dlog);
    store(b, x, P);
    b.base.last = b.dlog(0) - before;
    b.base.log_norm = b.dlog(0);
    ++b.base.t;
  }

 private:
  DerivBundle init_deriv_impl(Obs y0) const {
    MatrixJet x(Vec::Zero(n_), q_, order());
    MatrixJet P = P0_;
    DerivBundle b;
    b.order = order();
    b.index = index_;
    b.dlog = Vec::Zero(index_->size());
    advance(x, P, y0, b.dlog);
    store(b, x, P);
    b.base.log_norm = b.base.last = b.dlog(0);
    b.base.t = 0;
    return b;
  }

  void unpack(const DerivBundle& b, MatrixJet& x, MatrixJet& P) const {
    auto xs = [&](const Vec& w) -> Mat { return Eigen::Map<const Vec>(w.data(), n_); };
    auto ps = [&](const Vec& w) -> Mat { return Eigen::Map<const Mat>(w.data() + n_, n_, n_); };
    x = MatrixJet(xs(b.w[0]), q_, order());
    P = MatrixJet(ps(b.w[0]), q_, order());
    for (int a = 0; order() >= 1 && a < q_; ++a) {
      x.d[a] = xs(b.w[index_->unit(a)]);
      P.d[a] = ps(b.w[index_->unit(a)]);
    }
    for (int a = 0; order() >= 2 && a < q_; ++a)
      for (int c = a; c < q_; ++c) {
        const int k = MatrixJet::pair(a, c, q_);
        x.dd[k] = xs(b.w[index_->pair(a, c)]);
        P.dd[k] = ps(b.w[index_->pair(a, c)]);
      }
  }

  void store(DerivBundle& b, const MatrixJet& x, const MatrixJet& P) const {
    b.w.resize(index_->size());
    b.w[0] = pack(x.v, P.v);
    for (int a = 0; order() >= 1 && a < q_; ++a) b.w[index_->unit(a)] = pack(x.d[a], P.d[a]);
    for (int a = 0; order() >= 2 && a < q_; ++a)
      for (int c = a; c < q_; ++c) {
        const int k = MatrixJet::pair(a, c, q_);
        b.w[index_->pair(a, c)] = pack(x.dd[k], P.dd[k]);
      }
    b.base.weights = b.w[0];
  }

  /// One innovations step: adds the log-density jet of y to dl and moves
  /// (x̂, P) to the next prediction.
  void advance(MatrixJet& x, MatrixJet& P, Obs y, Vec& dl) const {
    const MatrixJet Ht = H_.transpose();
    const MatrixJet S = (H_ * P * Ht + Sigma_).symmetrized();
    const MatrixJet Y(Eigen::Map<const Vec>(y.data(), m_), q_, order());
    const MatrixJet e = Y - H_ * x;
    const MatrixJet Sinv = S.inverse();
    const MatrixJet quad = e.transpose() * Sinv * e;
    const MatrixJet ld = logdet(S, Sinv);
    if (!std::isfinite(ld.v(0, 0)) || !std::isfinite(quad.v(0, 0)))
      throw Error(Errc::NonFinite, "non-finite Kalman log-density");

    dl(0) += -0.5 * (m_ * kLog2Pi + ld.v(0, 0) + quad.v(0, 0));
    for (int a = 0; order() >= 1 && a < q_; ++a) dl(index_->unit(a)) += -0.5 * (ld.d[a](0, 0) + quad.d[a](0, 0));
    for (int a = 0; order() >= 2 && a < q_; ++a)
      for (int c = a; c < q_; ++c) {
        const int k = MatrixJet::pair(a, c, q_);
        dl(index_->pair(a, c)) += -0.5 * (ld.dd[k](0, 0) + quad.dd[k](0, 0));
      }

    const MatrixJet G = phi_ * P * Ht + FS_;
    const MatrixJet K = G * Sinv;
    x = phi_ * x + K * e;
    P = (phi_ * P * phi_.transpose() + Q_ - K * S * K.transpose()).symmetrized();
    make_psd(P.v);
  }

  int q_;
  int n_ = 0, m_ = 0;
  MatrixJet phi_, F_, H_, Sigma_, Q_, FS_, P0_;
  std::shared_ptr<const MultiIndexSet> index_;
};

}  // namespace

VarmaModel::VarmaModel(int m, int p, int q, Mat Sigma) : m_(m), p_(p), q_(q), Sigma_(std::move(Sigma)) {
  if (m < 1 || p < 0 || q < 0) throw Error(Errc::InvalidParameter, "VARMA orders must be non-negative and m >= 1");
  if (Sigma_.rows() != m || Sigma_.cols() != m)
    throw Error(Errc::DimensionMismatch, "noise covariance must be m×m", "model.sigma");
  Eigen::LLT<Mat> llt(Sigma_);
  if (llt.info() != Eigen::Success || (Sigma_ - Sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(Errc::InvalidParameter, "noise covariance must be symmetric positive definite", "model.sigma");
}

std::vector<std::string> VarmaModel::param_names() const {
  std::vector<std::string> out;
  for (int j = 1; j <= p_; ++j)
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c)
        out.push_back("ar" + std::to_string(j) + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  for (int j = 1; j <= q_; ++j)
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c)
        out.push_back("ma" + std::to_string(j) + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  return out;
}

std::vector<Mat> VarmaModel::alphas(const Vec& theta) const {
  std::vector<Mat> out;
  for (int j = 0; j < p_; ++j) {
    Mat a(m_, m_);
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c) a(r, c) = theta(j * m_ * m_ + r * m_ + c);
    out.push_back(a);
  }
  return out;
}

std::vector<Mat> VarmaModel::betas(const Vec& theta) const {
  std::vector<Mat> out;
  for (int j = 0; j < q_; ++j) {
    Mat b(m_, m_);
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c) b(r, c) = theta((p_ + j) * m_ * m_ + r * m_ + c);
    out.push_back(b);
  }
  return out;
}

LssmSpec VarmaModel::spec(const Vec& theta) const {
  check_dim(theta);
  return varma_to_lssm(alphas(theta), betas(theta), Sigma_);
}

MatrixJet VarmaModel::phi_jet(const Vec& theta, int order) const {
  const LssmSpec s = spec(theta);
  const int q = order > 0 ? param_dim() : 0;
  MatrixJet J(s.Phi, q, order);
  for (int j = 0; order >= 1 && j < p_; ++j)
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c) J.d[j * m_ * m_ + r * m_ + c](j * m_ + r, c) = -1.0;
  return J;
}

MatrixJet VarmaModel::f_jet(const Vec& theta, int order) const {
  const LssmSpec s = spec(theta);
  const int q = order > 0 ? param_dim() : 0;
  MatrixJet J(s.F, q, order);
  for (int j = 0; order >= 1 && j < p_; ++j)
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c) J.d[j * m_ * m_ + r * m_ + c](j * m_ + r, c) = -1.0;
  for (int j = 0; order >= 1 && j < q_; ++j)
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c) J.d[(p_ + j) * m_ * m_ + r * m_ + c](j * m_ + r, c) = 1.0;
  return J;
}

void VarmaModel::validate(const Vec& theta) const {
  check_dim(theta);
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!std::isfinite(theta(i))) throw Error(Errc::InvalidParameter, "non-finite coefficient", "model.theta");
  const LssmSpec s = spec(theta);
  if (s.state_dim() > 0) {
    const double rho = Eigen::EigenSolver<Mat>(s.Phi, false).eigenvalues().cwiseAbs().maxCoeff();
    if (!(rho < 1.0))
      throw Error(Errc::NonstationaryParameters, "AR part has spectral radius " + std::to_string(rho) + " >= 1",
                  "model.ar");
  }
}

std::unique_ptr<Evaluator> VarmaModel::bind(const Vec& theta, int order) const {
  check_order(order);
  validate(theta);
  return std::make_unique<KalmanEvaluator>(*this, theta, order);
}

void VarmaModel::simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int>, Trajectory& out) const {
  validate(theta);
  const LssmSpec s = spec(theta);
  const Mat L = Sigma_.llt().matrixL();
  const Mat root = sqrt_psd(solve_stein(s.Phi, s.F * s.Sigma * s.F.transpose()));
  Vec z(s.state_dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  Vec x = root * z;
  Vec u(m_), eps(m_), y(m_);
  out.y.reserve(out.y.size() + n);
  for (std::size_t t = 0; t < n; ++t) {
    for (int i = 0; i < m_; ++i) u(i) = rng.normal();
    eps = L * u;
    y = s.H * x + eps;
    out.y.push_back(Obs(y.data(), static_cast<std::size_t>(m_)));
    x = s.Phi * x + s.F * eps;
  }
}

FisherEstimate lssm_fisher(const VarmaModel& model, const Vec& theta, std::size_t n, std::uint64_t seed,
                           std::size_t burn_in) {
  model.validate(theta);
  const int q = model.param_dim();
  const LssmSpec s = model.spec(theta);
  const int hm = s.state_dim();
  const int m = s.obs_dim();

  // Steady-state gain and innovation covariance with first derivatives.
  const MatrixJet phi = model.phi_jet(theta, 1);
  const MatrixJet F = model.f_jet(theta, 1);
  const MatrixJet H(s.H, q, 1), Sig(s.Sigma, q, 1);
  const MatrixJet Q = F * Sig * F.transpose();
  const MatrixJet FS = F * Sig;
  const MatrixJet Ht = H.transpose();
  MatrixJet P = solve_stein(phi, Q);
  MatrixJet S, K;
  bool converged = false;
  for (int it = 0; it < 100000 && !converged; ++it) {
    S = (H * P * Ht + Sig).symmetrized();
    K = (phi * P * Ht + FS) * S.inverse();
    const MatrixJet next = (phi * P * phi.transpose() + Q - K * S * K.transpose()).symmetrized();
    converged = next.max_abs_diff(P) < 1e-12;
    P = next;
  }
  if (!converged) throw Error(Errc::RiccatiNoConvergence, "Riccati jet did not converge in 10^5 iterations");
  S = (H * P * Ht + Sig).symmetrized();
  K = (phi * P * Ht + FS) * S.inverse();
  const MatrixJet Sinv = S.inverse();

  Mat trace_term(q, q);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) trace_term(a, b) = 0.5 * (Sinv.v * S.d[a] * Sinv.v * S.d[b]).trace();

  const Trajectory traj = simulate(model, theta, n, seed);
  if (n <= burn_in) throw Error(Errc::TooShort, "trajectory is not longer than the burn-in");
  BatchAccumulator acc(n - burn_in, static_cast<std::size_t>(q) * q);

  Vec x = Vec::Zero(hm);
  std::vector<Vec> dx(q, Vec::Zero(hm));
  std::vector<Vec> de(q);
  Mat J(q, q);
  for (std::size_t t = 0; t < n; ++t) {
    const Vec y = Eigen::Map<const Vec>(traj.y[t].data(), m);
    const Vec e = y - s.H * x;
    for (int a = 0; a < q; ++a) de[a] = -s.H * dx[a];
    if (t >= burn_in) {
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) J(a, b) = de[a].dot(Sinv.v * de[b]) + trace_term(a, b);
      acc.add(J.data());
    }
    for (int a = 0; a < q; ++a) dx[a] = phi.d[a] * x + s.Phi * dx[a] + K.d[a] * e + K.v * de[a];
    x = s.Phi * x + K.v * e;
  }

  FisherEstimate est;
  est.value = Eigen::Map<const Mat>(acc.mean().data(), q, q);
  est.value = (est.value + est.value.transpose()) / 2.0;
  est.se = Eigen::Map<const Mat>(acc.se().data(), q, q);
  est.n = n;
  est.burn_in = burn_in;
  est.seed = seed;
  est.method = "lssm-asymptotic";
  return est;
}

}  // namespace ghmm
