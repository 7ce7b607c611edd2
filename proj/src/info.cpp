#include "ghmm/info.hpp"

#include "ghmm/error.hpp"
#include "ghmm/filter.hpp"
#include "ghmm/models/product.hpp"
#include "ghmm/montecarlo.hpp"
#include "ghmm/sensitivity.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace ghmm {

namespace {

std::size_t checked_window(const SampleSpec& s) {
  const std::size_t b = s.window_start();
  if (s.n <= b) throw Error(Errc::TooShort, "trajectory length must exceed the burn-in", "estimator.n");
  return b;
}

// Long-run average of per-step increments of the order-r cumulative
// derivatives; `emit` maps (previous, current) bundles to one stream value.
template <class Emit>
FisherEstimate fisher_from_increments(const Model& model, const Vec& theta0, const SampleSpec& s, int r,
                                      const char* method, Emit&& emit) {
  const std::size_t burn = checked_window(s);
  const int q = model.param_dim();
  FisherEstimate est;
  est.n = s.n;
  est.burn_in = burn;
  est.seed = s.seed;
  est.method = method;
  if (q == 0) {
    model.validate(theta0);
    est.value = Mat(0, 0);
    est.se = Mat(0, 0);
    return est;
  }
  const Trajectory traj = simulate(model, theta0, s.n, s.seed, s.x0);
  const std::size_t pairs = static_cast<std::size_t>(q) * (q + 1) / 2;
  BatchAccumulator acc(s.n - burn, pairs);
  Vec prev = Vec::Zero(model.param_dim() * (r == 1 ? 1 : q));
  Vec row(pairs);
  for_each_bundle(model, theta0, traj.y, r, [&](std::size_t t, const DerivBundle& b) {
    Vec cur = r == 1 ? bundle_score(b) : bundle_hessian(b).reshaped().eval();
    if (t >= burn) {
      emit(cur, prev, q, row);
      acc.add(row);
    }
    prev = std::move(cur);
  });
  const Vec mean = acc.mean(), se = acc.se();
  est.value = Mat(q, q);
  est.se = Mat(q, q);
  int j = 0;
  for (int a = 0; a < q; ++a)
    for (int b = a; b < q; ++b, ++j) {
      est.value(a, b) = est.value(b, a) = mean(j);
      est.se(a, b) = est.se(b, a) = se(j);
    }
  return est;
}

}  // namespace

FisherEstimate fisher_hessian_estimate(const Model& model, const Vec& theta0, const SampleSpec& s) {
  return fisher_from_increments(model, theta0, s, 2, "hessian-average",
                                [](const Vec& cur, const Vec& prev, int q, Vec& row) {
                                  int j = 0;
                                  for (int a = 0; a < q; ++a)
                                    for (int b = a; b < q; ++b, ++j) {
                                      const int k = b * q + a;
                                      row(j) = -(cur(k) - prev(k));
                                    }
                                });
}

FisherEstimate fisher_score_estimate(const Model& model, const Vec& theta0, const SampleSpec& s) {
  return fisher_from_increments(model, theta0, s, 1, "score-outer",
                                [](const Vec& cur, const Vec& prev, int q, Vec& row) {
                                  const Vec g = cur - prev;
                                  int j = 0;
                                  for (int a = 0; a < q; ++a)
                                    for (int b = a; b < q; ++b, ++j) row(j) = g(a) * g(b);
                                });
}

KlEstimate kl_on_series(const Model& model, const Vec& theta1, const Vec& theta0, const Series& y,
                        std::size_t burn_in) {
  KlEstimate est;
  est.n = y.size();
  est.burn_in = burn_in;
  if (y.size() <= burn_in) throw Error(Errc::TooShort, "trajectory length must exceed the burn-in", "estimator.n");
  model.validate(theta0);
  const std::vector<double> l1 = log_increments(model, theta1, y);
  std::vector<double> l0;
  try {
    l0 = log_increments(model, theta0, y);
  } catch (const Error& e) {
    if (e.code() != Errc::AllZeroWeights) throw;
    est.infinite = true;
    est.value = std::numeric_limits<double>::infinity();
    return est;
  }
  std::vector<double> diff(l1.size());
  double s1 = 0.0, s0 = 0.0;
  for (std::size_t t = 0; t < l1.size(); ++t) {
    diff[t] = l1[t] - l0[t];
    if (t >= burn_in) {
      s1 += l1[t];
      s0 += l0[t];
    }
  }
  const BatchMeans bm = long_run_average(diff, burn_in);
  const double m = static_cast<double>(y.size() - burn_in);
  est.value = bm.mean;
  est.se = bm.se;
  est.mean_ll1 = s1 / m;
  est.mean_ll0 = s0 / m;
  return est;
}

KlEstimate kl_estimate(const Model& model, const Vec& theta1, const Vec& theta0, const SampleSpec& s, Rng rng) {
  const std::size_t burn = checked_window(s);
  const Trajectory traj = simulate(model, theta1, s.n, rng, s.x0);
  KlEstimate est = kl_on_series(model, theta1, theta0, traj.y, burn);
  est.seed = s.seed;
  return est;
}

KlEstimate kl_estimate(const Model& model, const Vec& theta1, const Vec& theta0, const SampleSpec& s) {
  return kl_estimate(model, theta1, theta0, s, Rng(s.seed));
}

double kl_exact_small(const FiniteModel& model, const Vec& theta1, const Vec& theta0, std::size_t n) {
  if (n < 1) throw Error(Errc::InvalidParameter, "n must be at least 1", "estimator.n");
  const FiniteTables t1 = model.tables(theta1, 0), t0 = model.tables(theta0, 0);
  const int A = t1.symbols;
  double total = 1.0;
  for (std::size_t i = 0; i <= n; ++i) {
    total *= A;
    if (total > 1e6) throw Error(Errc::TooLarge, "exact KL enumeration exceeds 10^6 sequences", "estimator.n");
  }
  const Mat &P1 = t1.P[0], &P0 = t0.P[0], &B1 = t1.B[0], &B0 = t0.B[0];
  long double acc = 0.0L;
  bool infinite = false;
  // Depth-first over symbol sequences, carrying unnormalized forward vectors.
  auto visit = [&](auto&& self, const Vec& a1, const Vec& a0, std::size_t depth) -> void {
    if (depth == n + 1) {
      const double L1 = a1.sum();
      if (L1 <= 0.0) return;
      const double L0 = a0.sum();
      if (L0 <= 0.0) {
        infinite = true;
        return;
      }
      // L1 log(L1/L0) - L1 + L0 has the same sum (both laws total 1) and
      // every term is non-negative, so rounding cannot push the total below 0.
      const long double r = std::log(static_cast<long double>(L1)) - std::log(static_cast<long double>(L0));
      acc += static_cast<long double>(L1) * std::max(0.0L, r + std::expm1(-r));
      return;
    }
    for (int y = 0; y < A; ++y) {
      Vec b1, b0;
      if (depth == 0) {
        b1 = t1.init[0].cwiseProduct(B1.col(y));
        b0 = t0.init[0].cwiseProduct(B0.col(y));
      } else {
        b1 = (P1.transpose() * a1).cwiseProduct(B1.col(y));
        b0 = (P0.transpose() * a0).cwiseProduct(B0.col(y));
      }
      if (b1.sum() <= 0.0) continue;
      self(self, b1, b0, depth + 1);
    }
  };
  visit(visit, Vec(), Vec(), 0);
  if (infinite) return std::numeric_limits<double>::infinity();
  return static_cast<double>(acc / static_cast<long double>(n));
}

QuadCheck quadratic_check(const Model& model, const Vec& theta0, const Vec& v, const std::vector<double>& eps,
                          const SampleSpec& s, const FisherEstimate* fisher, int threads) {
  if (v.size() != model.param_dim())
    throw Error(Errc::DimensionMismatch, "direction has the wrong length", "estimator.direction");
  if (eps.empty()) throw Error(Errc::InvalidConfig, "empty epsilon grid", "estimator.eps_grid");
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (!(eps[i] > 0.0) || (i > 0 && !(eps[i] < eps[i - 1])))
      throw Error(Errc::InvalidConfig, "epsilon grid must be positive and strictly decreasing", "estimator.eps_grid");

  FisherEstimate own;
  if (!fisher) {
    own = fisher_hessian_estimate(model, theta0, s);
    fisher = &own;
  }
  QuadCheck out;
  out.vIv = v.dot(fisher->value * v);
  double var = 0.0;
  for (int a = 0; a < v.size(); ++a)
    for (int b = 0; b < v.size(); ++b) var += std::pow(v(a) * v(b) * fisher->se(a, b), 2);
  out.vIv_se = std::sqrt(var);

  std::vector<KlEstimate> kl(eps.size());
  parallel_for(eps.size(), threads, [&](std::size_t i) {
    kl[i] = kl_estimate(model, theta0 + eps[i] * v, theta0, s);
  });
  for (std::size_t i = 0; i < eps.size(); ++i) {
    QuadRow r;
    r.eps = eps[i];
    r.kl = kl[i].value;
    r.kl_se = kl[i].se;
    r.quad = eps[i] * eps[i] * out.vIv / 2.0;
    r.rho = r.kl / r.quad;
    r.rho_se = std::hypot(r.kl_se / r.quad, r.rho * out.vIv_se / out.vIv);
    r.dev = std::abs(r.rho - 1.0);
    out.rows.push_back(r);
  }
  out.dev_nonincreasing = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (out.rows[i].dev > out.rows[i - 1].dev) out.dev_nonincreasing = false;
  return out;
}

CrlbReport crlb_report(const Mat& info, const Vec& v, const std::vector<std::size_t>& ns) {
  if (info.rows() != info.cols() || info.rows() != v.size())
    throw Error(Errc::DimensionMismatch, "information matrix and direction sizes differ", "estimator.direction");
  CrlbReport rep;
  const Mat sym = (info + info.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  const Vec lam = es.eigenvalues();
  const double top = lam.cwiseAbs().maxCoeff();
  const double bottom = lam.cwiseAbs().minCoeff();
  rep.condition = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
  const double cutoff = 1e-12 * top;
  const Vec c = es.eigenvectors().transpose() * v;
  for (int k = 0; k < lam.size(); ++k) {
    if (std::abs(lam(k)) <= cutoff) {
      rep.pseudo_inverse = true;
      continue;
    }
    rep.classical += c(k) * c(k) / lam(k);
  }
  rep.minimax = v.squaredNorm() / (16.0 * v.dot(sym * v));
  for (std::size_t n : ns) rep.per_n.emplace_back(n, rep.classical / static_cast<double>(n));
  return rep;
}

AdditivityCheck kl_additivity_check(std::shared_ptr<const Model> a, std::shared_ptr<const Model> b,
                                    const Vec& theta1_a, const Vec& theta0_a, const Vec& theta1_b,
                                    const Vec& theta0_b, const SampleSpec& s, bool shared_streams) {
  const auto prod = std::make_shared<ProductModel>(a, b);
  const Vec t1 = ProductModel::join(theta1_a, theta1_b), t0 = ProductModel::join(theta0_a, theta0_b);
  AdditivityCheck out;
  out.product = kl_estimate(*prod, t1, t0, s);
  const Rng root(s.seed);
  out.a = kl_estimate(*a, theta1_a, theta0_a, s, root.split(shared_streams ? 0 : 2));
  out.b = kl_estimate(*b, theta1_b, theta0_b, s, root.split(shared_streams ? 1 : 3));
  out.sum = out.a.value + out.b.value;
  out.sum_se = std::hypot(out.a.se, out.b.se);
  out.diff = out.product.value - out.sum;
  return out;
}

std::vector<SweepPoint> kl_sweep(const Model& model, const Vec& theta0, int index, const std::vector<double>& grid,
                                 const SampleSpec& s, int replicates, int threads) {
  if (index < 0 || index >= model.param_dim())
    throw Error(Errc::InvalidConfig, "swept parameter index out of range", "estimator.param");
  if (replicates < 1) throw Error(Errc::InvalidConfig, "need at least one replicate", "estimator.replicates");
  const auto R = static_cast<std::size_t>(replicates);
  std::vector<SweepPoint> out(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    out[g].value = grid[g];
    out[g].replicates.resize(R);
  }
  const Rng root(s.seed);
  parallel_for(grid.size() * R, threads, [&](std::size_t task) {
    const std::size_t g = task / R, r = task % R;
    Vec theta1 = theta0;
    theta1(index) = grid[g];
    out[g].replicates[r] = kl_estimate(model, theta1, theta0, s, root.split(r));
  });
  for (auto& p : out) {
    double sum = 0.0, var = 0.0;
    for (const auto& k : p.replicates) {
      sum += k.value;
      var += k.se * k.se;
    }
    p.mean = sum / static_cast<double>(R);
    p.se = std::sqrt(var) / static_cast<double>(R);
  }
  return out;
}

}  // namespace ghmm
