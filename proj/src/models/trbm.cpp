#include "ghmm/models/trbm.hpp"

#include "ghmm/error.hpp"

#include <cmath>

namespace ghmm {

namespace {

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
int bit(int code, int i) { return (code >> i) & 1; }

}  // namespace

TrbmModel::TrbmModel(int visible, int hidden) : D_(visible), P_(hidden) {
  if (visible < 1 || hidden < 1) throw Error(Errc::InvalidParameter, "TRBM needs at least one visible and one hidden unit");
  if (visible > 6 || hidden > 6)
    throw Error(Errc::StateSpaceTooLarge, "TRBM enumeration is capped at 6 visible and 6 hidden units");
}

std::vector<std::string> TrbmModel::param_names() const {
  std::vector<std::string> out;
  for (int d = 0; d < D_; ++d)
    for (int j = 0; j < P_; ++j) out.push_back("W[" + std::to_string(d) + "][" + std::to_string(j) + "]");
  for (int i = 0; i < P_; ++i)
    for (int j = 0; j < P_; ++j) out.push_back("Wp[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  for (int d = 0; d < D_; ++d) out.push_back("bY[" + std::to_string(d) + "]");
  for (int j = 0; j < P_; ++j) out.push_back("bH[" + std::to_string(j) + "]");
  return out;
}

void TrbmModel::validate(const Vec& theta) const {
  check_dim(theta);
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!std::isfinite(theta(i))) throw Error(Errc::InvalidParameter, "non-finite TRBM weight", "model.theta");
}

Vec TrbmModel::theta_of(const TrbmSpec& s) const {
  if (s.W.rows() != D_ || s.W.cols() != P_ || s.Wp.rows() != P_ || s.Wp.cols() != P_ || s.bY.size() != D_ ||
      s.bH.size() != P_)
    throw Error(Errc::DimensionMismatch, "TRBM weights have inconsistent shapes", "model");
  Vec th(param_dim());
  int k = 0;
  for (int d = 0; d < D_; ++d)
    for (int j = 0; j < P_; ++j) th(k++) = s.W(d, j);
  for (int i = 0; i < P_; ++i)
    for (int j = 0; j < P_; ++j) th(k++) = s.Wp(i, j);
  for (int d = 0; d < D_; ++d) th(k++) = s.bY(d);
  for (int j = 0; j < P_; ++j) th(k++) = s.bH(j);
  return th;
}

TrbmSpec TrbmModel::spec_of(const Vec& th) const {
  check_dim(th);
  TrbmSpec s{Mat(D_, P_), Mat(P_, P_), Vec(D_), Vec(P_)};
  int k = 0;
  for (int d = 0; d < D_; ++d)
    for (int j = 0; j < P_; ++j) s.W(d, j) = th(k++);
  for (int i = 0; i < P_; ++i)
    for (int j = 0; j < P_; ++j) s.Wp(i, j) = th(k++);
  for (int d = 0; d < D_; ++d) s.bY(d) = th(k++);
  for (int j = 0; j < P_; ++j) s.bH(j) = th(k++);
  return s;
}

Mat TrbmModel::joint(const Vec& theta, int h_prev) const {
  const TrbmSpec s = spec_of(theta);
  const int V = symbols(), H = states();
  Mat logp(V, H);
  for (int v = 0; v < V; ++v)
    for (int h = 0; h < H; ++h) {
      double e = 0.0;
      for (int d = 0; d < D_; ++d) {
        if (!bit(v, d)) continue;
        e += s.bY(d);
        for (int j = 0; j < P_; ++j) e += s.W(d, j) * bit(h, j);
      }
      for (int j = 0; j < P_; ++j) {
        if (!bit(h, j)) continue;
        e += s.bH(j);
        for (int i = 0; i < P_; ++i) e += s.Wp(i, j) * bit(h_prev, i);
      }
      logp(v, h) = e;
    }
  const double mx = logp.maxCoeff();
  Mat p = (logp.array() - mx).exp();
  return p / p.sum();
}

void TrbmModel::fill(const Vec& theta, FiniteTables& t) const {
  const TrbmSpec s = spec_of(theta);
  const auto& idx = *t.index;
  const int r = idx.order();
  const int V = symbols(), H = states(), q = param_dim();
  const int oWp = D_ * P_, obY = oWp + P_ * P_, obH = obY + D_;

  // Values by enumeration of the joint table.
  for (int hp = 0; hp < H; ++hp) {
    const Mat J = joint(theta, hp);
    for (int h = 0; h < H; ++h) {
      const double m = J.col(h).sum();
      t.P[0](hp, h) = m;
      if (hp == 0)
        for (int v = 0; v < V; ++v) t.B[0](h, v) = J(v, h) / m;
    }
  }
  if (r == 0) return;

  // z_d(h) = b_Y,d + (W h)_d for every configuration.
  Mat z(D_, H);
  for (int h = 0; h < H; ++h)
    for (int d = 0; d < D_; ++d) {
      z(d, h) = s.bY(d);
      for (int j = 0; j < P_; ++j) z(d, h) += s.W(d, j) * bit(h, j);
    }

  // Transition rows through the softmax of the logits.
  for (int hp = 0; hp < H; ++hp) {
    Vec logit(H);
    for (int h = 0; h < H; ++h) {
      double l = 0.0;
      for (int j = 0; j < P_; ++j) {
        if (!bit(h, j)) continue;
        l += s.bH(j);
        for (int i = 0; i < P_; ++i) l += s.Wp(i, j) * bit(hp, i);
      }
      for (int d = 0; d < D_; ++d) l += softplus(z(d, h));
      logit(h) = l;
    }
    Vec p = (logit.array() - logit.maxCoeff()).exp();
    p /= p.sum();

    std::vector<Vec> s1(q, Vec::Zero(H));
    for (int h = 0; h < H; ++h) {
      for (int d = 0; d < D_; ++d) {
        const double sg = sigmoid(z(d, h));
        for (int j = 0; j < P_; ++j) s1[d * P_ + j](h) = sg * bit(h, j);
        s1[obY + d](h) = sg;
      }
      for (int i = 0; i < P_; ++i)
        for (int j = 0; j < P_; ++j) s1[oWp + i * P_ + j](h) = bit(hp, i) * bit(h, j);
      for (int j = 0; j < P_; ++j) s1[obH + j](h) = bit(h, j);
    }
    std::vector<Vec> s2;
    if (r >= 2) {
      s2.assign(static_cast<std::size_t>(q) * (q + 1) / 2, Vec::Zero(H));
      // Only pairs of (W_d·, b_Y,d) parameters sharing the same visible unit d.
      auto factor = [&](int a, int h, int& d) -> double {
        if (a < oWp) {
          d = a / P_;
          return bit(h, a % P_);
        }
        if (a >= obY && a < obH) {
          d = a - obY;
          return 1.0;
        }
        d = -1;
        return 0.0;
      };
      int j = 0;
      for (int a = 0; a < q; ++a)
        for (int b = a; b < q; ++b, ++j)
          for (int h = 0; h < H; ++h) {
            int da, db;
            const double fa = factor(a, h, da), fb = factor(b, h, db);
            if (da < 0 || da != db) continue;
            const double sg = sigmoid(z(da, h));
            s2[j](h) = sg * (1.0 - sg) * fa * fb;
          }
    }
    std::vector<Vec> p1, p2;
    softmax_derivatives(p, s1, r >= 2 ? &s2 : nullptr, p1, r >= 2 ? &p2 : nullptr);
    for (int a = 0; a < q; ++a) t.P[idx.unit(a)].row(hp) = p1[a].transpose();
    if (r >= 2) {
      int j = 0;
      for (int a = 0; a < q; ++a)
        for (int b = a; b < q; ++b, ++j) t.P[idx.pair(a, b)].row(hp) = p2[j].transpose();
    }
  }

  // Emission: product of independent Bernoulli units given h.
  for (int h = 0; h < H; ++h) {
    for (int v = 0; v < V; ++v) {
      const double f = t.B[0](h, v);
      Vec u1 = Vec::Zero(q);
      for (int d = 0; d < D_; ++d) {
        const double g = bit(v, d) - sigmoid(z(d, h));
        u1(obY + d) = g;
        for (int j = 0; j < P_; ++j) u1(d * P_ + j) = g * bit(h, j);
      }
      for (int a = 0; a < q; ++a) t.B[idx.unit(a)](h, v) = f * u1(a);
      if (r < 2) continue;
      for (int a = 0; a < q; ++a)
        for (int b = a; b < q; ++b) {
          double u2 = 0.0;
          // Same visible unit: -σ'(z_d) times the two linear factors.
          auto unit_of = [&](int k, double& fac) {
            if (k < oWp) {
              fac = bit(h, k % P_);
              return k / P_;
            }
            if (k >= obY && k < obH) {
              fac = 1.0;
              return k - obY;
            }
            return -1;
          };
          double fa = 0, fb = 0;
          const int da = unit_of(a, fa), db = unit_of(b, fb);
          if (da >= 0 && da == db) {
            const double sg = sigmoid(z(da, h));
            u2 = -sg * (1.0 - sg) * fa * fb;
          }
          t.B[idx.pair(a, b)](h, v) = f * (u2 + u1(a) * u1(b));
        }
    }
  }
}

TrbmHmm trbm_to_hmm(const TrbmSpec& spec) {
  if (spec.visible() > 6 || spec.hidden() > 6)
    throw Error(Errc::StateSpaceTooLarge, "TRBM enumeration is capped at 6 visible and 6 hidden units");
  auto model = std::make_shared<TrbmModel>(spec.visible(), spec.hidden());
  Vec theta = model->theta_of(spec);
  model->validate(theta);
  return {model, theta};
}

}  // namespace ghmm
