#include "ghmm/inference.hpp"

#include "ghmm/error.hpp"
#include "ghmm/format.hpp"
#include "ghmm/models/discrete_hmm.hpp"
#include "ghmm/montecarlo.hpp"
#include "ghmm/sensitivity.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace ghmm {

long long delta(int t, int j) {
  if (t < 1 || j < 1) throw Error(Errc::InvalidParameter, "penalty needs t >= 1 and j >= 1");
  long long hi = 1;
  for (int i = 0; i < j; ++i) hi *= t;
  return hi - hi / t;
}

namespace {

constexpr double kBoundary = 30.0;

struct Point {
  Vec x;      // free coordinates only
  double f;   // -log L
  Vec g;      // gradient of f in x
  bool ok;
};

class Objective {
 public:
  Objective(const Model& model, const Series& y, Vec u_full, std::vector<int> free)
      : model_(model), y_(y), u_(std::move(u_full)), free_(std::move(free)) {}

  Vec gather(const Vec& u) const {
    Vec x(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t i = 0; i < free_.size(); ++i) x(static_cast<Eigen::Index>(i)) = u(free_[i]);
    return x;
  }

  Vec scatter(const Vec& x) const {
    Vec u = u_;
    for (std::size_t i = 0; i < free_.size(); ++i) u(free_[i]) = x(static_cast<Eigen::Index>(i));
    return u;
  }

  Point eval(const Vec& x, bool throw_on_error) const {
    const Vec u = scatter(x);
    try {
      const Vec theta = model_.from_free(u);
      const DerivBundle b = derivatives(model_, theta, y_, 1);
      const double ll = b.dlog(0);
      if (!std::isfinite(ll)) throw Error(Errc::NonFinite, "non-finite log-likelihood");
      const Vec gu = model_.free_jacobian(u).transpose() * bundle_score(b);
      Point p{x, -ll, -gather(gu), true};
      if (!p.g.allFinite()) throw Error(Errc::NonFinite, "non-finite score");
      return p;
    } catch (const Error&) {
      if (throw_on_error) throw;
      return {x, std::numeric_limits<double>::infinity(), Vec(), false};
    }
  }

 private:
  const Model& model_;
  const Series& y_;
  Vec u_;
  std::vector<int> free_;
};

struct Run {
  Vec u;
  double loglik;
  int iterations;
  double grad_norm;
  bool converged;
  bool boundary_hit;
};

double inf_norm(const Vec& g) { return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff(); }

Run bfgs(const Objective& obj, const Vec& u0, const FitOptions& opt) {
  Point cur = obj.eval(obj.gather(u0), true);
  const Eigen::Index m = cur.x.size();
  Run run{obj.scatter(cur.x), -cur.f, 0, inf_norm(cur.g), false, false};
  if (m == 0) {
    run.converged = true;
    return run;
  }
  Mat Hinv = Mat::Identity(m, m) / std::max(1.0, inf_norm(cur.g));
  bool fresh = true;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (inf_norm(cur.g) <= opt.grad_tol) {
      run.converged = true;
      break;
    }
    Vec d = -Hinv * cur.g;
    double slope = cur.g.dot(d);
    if (!(slope < 0.0)) {
      Hinv = Mat::Identity(m, m) / std::max(1.0, inf_norm(cur.g));
      fresh = true;
      d = -Hinv * cur.g;
      slope = cur.g.dot(d);
    }
    double step = 1.0;
    Point next;
    bool accepted = false;
    while (step > 1e-14) {
      next = obj.eval(cur.x + step * d, false);
      if (next.ok && next.f <= cur.f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      // Near the optimum the Armijo decrease is below the rounding of f.
      // Approximate Wolfe: f unchanged up to rounding and the slope has
      // turned or flattened.
      if (next.ok && next.f <= cur.f + 1e-12 * std::abs(cur.f)) {
        const double s1 = next.g.dot(d);
        if (s1 >= 0.9 * slope && s1 <= -(1.0 - 2e-4) * slope) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;  // no descent even along the scaled gradient
      Hinv = Mat::Identity(m, m) / std::max(1.0, inf_norm(cur.g));
      fresh = true;
      continue;
    }
    const Vec s = next.x - cur.x, yv = next.g - cur.g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (fresh) Hinv = Mat::Identity(m, m) * (sy / yv.squaredNorm());
      const double rho = 1.0 / sy;
      const Mat I = Mat::Identity(m, m);
      Hinv = (I - rho * s * yv.transpose()) * Hinv * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
      fresh = false;
    }
    cur = std::move(next);
    run.iterations = it + 1;
    if (inf_norm(cur.x) > kBoundary) {
      run.boundary_hit = true;
      break;
    }
  }
  run.u = obj.scatter(cur.x);
  run.loglik = -cur.f;
  run.grad_norm = inf_norm(cur.g);
  if (run.grad_norm <= opt.grad_tol && !run.boundary_hit) run.converged = true;
  return run;
}

}  // namespace

FitResult mle_fit(const Model& model, const Series& y, const Vec& theta_init, const FitOptions& options) {
  model.validate(theta_init);
  const int q = model.param_dim();
  if (!options.free.empty() && static_cast<int>(options.free.size()) != q)
    throw Error(Errc::DimensionMismatch, "free mask length differs from the parameter count", "estimator.free");
  if (options.starts < 1) throw Error(Errc::InvalidConfig, "need at least one start", "estimator.starts");
  std::vector<int> free;
  for (int i = 0; i < q; ++i)
    if (options.free.empty() || options.free[static_cast<std::size_t>(i)]) free.push_back(i);

  const Vec u0 = model.to_free(theta_init);
  const Objective obj(model, y, u0, free);
  const Rng root(options.seed);
  std::vector<Run> runs(static_cast<std::size_t>(options.starts));
  parallel_for(runs.size(), options.threads, [&](std::size_t s) {
    Vec u = u0;
    if (s > 0) {
      Rng rng = root.split(s);
      for (int i : free) u(i) += options.jitter * rng.normal();
    }
    runs[s] = bfgs(obj, u, options);
  });

  FitResult out;
  std::size_t best = 0;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    out.start_logliks.push_back(runs[s].loglik);
    if (runs[s].loglik > runs[best].loglik) best = s;
  }
  const Run& r = runs[best];
  out.theta = model.from_free(r.u);
  out.loglik = r.loglik;
  out.iterations = r.iterations;
  out.grad_norm = r.grad_norm;
  out.converged = r.converged;
  out.boundary_hit = r.boundary_hit;
  out.best_start = static_cast<int>(best);
  return out;
}

double lr_stat(const FitResult& full, const FitResult& restricted) {
  const double gap = full.loglik - restricted.loglik;
  if (gap < -1e-4)
    throw Error(Errc::NestingViolation, "restricted fit has a higher log-likelihood than the full fit");
  return std::max(0.0, 2.0 * gap);
}

int select_row(const std::vector<AicRow>& rows) {
  bool any = false;
  for (const auto& r : rows) any = any || r.converged;
  int best = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (any && !rows[i].converged) continue;
    if (best < 0 || rows[i].aic < rows[static_cast<std::size_t>(best)].aic - 1e-9) best = static_cast<int>(i);
  }
  return best;
}

namespace {

AicRow make_row(int k, long long penalty, const KOrderHmm& model, const FitResult& fit) {
  AicRow row;
  row.k = k;
  row.loglik = fit.loglik;
  row.penalty = penalty;
  row.aic = -2.0 * fit.loglik + 2.0 * static_cast<double>(penalty);
  row.params = model.param_dim();
  row.converged = fit.converged;
  row.iterations = fit.iterations;
  row.grad_norm = fit.grad_norm;
  row.theta = fit.theta;
  return row;
}

FitOptions all_free(const FitOptions& o) {
  FitOptions c = o;
  c.free.clear();
  return c;
}

}  // namespace

AicReport aic_order_select(const Series& y, int l, int k_max, int alphabet, const FitOptions& options) {
  if (k_max < 1) throw Error(Errc::InvalidConfig, "k_max must be at least 1", "estimator.k_max");
  const FitOptions opt = all_free(options);
  AicReport rep;
  std::unique_ptr<KOrderHmm> prev;
  for (int k = 1; k <= k_max; ++k) {
    auto model = std::make_unique<KOrderHmm>(l, k, alphabet);
    const Vec init = prev ? korder_lift(*prev, rep.rows.back().theta) : model->default_theta();
    const FitResult fit = mle_fit(*model, y, init, opt);
    rep.rows.push_back(make_row(k, delta(l, k + 1), *model, fit));
    prev = std::move(model);
  }
  rep.selected = rep.rows[static_cast<std::size_t>(select_row(rep.rows))].k;
  return rep;
}

AicReport aic_state_select(const Series& y, int m, const std::vector<int>& ks, int alphabet,
                           const FitOptions& options) {
  if (ks.empty()) throw Error(Errc::InvalidConfig, "empty state-count range", "estimator.k_range");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1]) throw Error(Errc::InvalidConfig, "state counts must increase", "estimator.k_range");
  const FitOptions opt = all_free(options);
  AicReport rep;
  std::unique_ptr<KOrderHmm> prev;
  for (int k : ks) {
    auto model = std::make_unique<KOrderHmm>(k, m, alphabet);
    const bool warm = prev && m == 1 && prev->hidden_states() + 1 == k;
    const Vec init = warm ? split_last_state(*prev, rep.rows.back().theta) : model->default_theta();
    const FitResult fit = mle_fit(*model, y, init, opt);
    rep.rows.push_back(make_row(k, delta(k, m + 1), *model, fit));
    prev = std::move(model);
  }
  rep.selected = rep.rows[static_cast<std::size_t>(select_row(rep.rows))].k;
  return rep;
}

void write_aic_csv(std::ostream& os, const AicReport& report) {
  auto num = [&](double v) { write_number(os, v); };
  os << "k,loglik,penalty,aic,p,converged,iters\n";
  for (const auto& r : report.rows) {
    os << r.k << ',';
    num(r.loglik);
    os << ',' << r.penalty << ',';
    num(r.aic);
    os << ',' << r.params << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << '\n';
  }
}

}  // namespace ghmm
