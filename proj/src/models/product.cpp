#include "ghmm/models/product.hpp"

#include "ghmm/error.hpp"

namespace ghmm {

namespace {

// weights = (size of the first state, first weights, second weights).
class ProductEvaluator : public Evaluator {
 public:
  ProductEvaluator(std::unique_ptr<Evaluator> a, std::unique_ptr<Evaluator> b, std::size_t da)
      : Evaluator(0), a_(std::move(a)), b_(std::move(b)), da_(da) {}

  FilterState init(Obs y0) const override {
    return join(a_->init(y0.first(da_)), b_->init(y0.subspan(da_)), 0);
  }

  void step(FilterState& s, Obs y_prev, Obs y_t) const override {
    const auto na = static_cast<Eigen::Index>(s.weights(0));
    FilterState sa{s.weights.segment(1, na), 0.0, s.t};
    FilterState sb{s.weights.tail(s.weights.size() - 1 - na), 0.0, s.t};
    a_->step(sa, y_prev.first(da_), y_t.first(da_));
    b_->step(sb, y_prev.subspan(da_), y_t.subspan(da_));
    const double before = s.log_norm;
    s = join(sa, sb, before);
  }

  DerivBundle init_deriv(Obs) const override {
    throw Error(Errc::UnsupportedOrder, "product models provide the likelihood only");
  }
  void step_deriv(DerivBundle&, Obs, Obs) const override {
    throw Error(Errc::UnsupportedOrder, "product models provide the likelihood only");
  }

 private:
  static FilterState join(const FilterState& a, const FilterState& b, double before) {
    FilterState s;
    s.weights.resize(1 + a.weights.size() + b.weights.size());
    s.weights(0) = static_cast<double>(a.weights.size());
    s.weights.segment(1, a.weights.size()) = a.weights;
    s.weights.tail(b.weights.size()) = b.weights;
    s.last = a.last + b.last;
    s.log_norm = before + s.last;
    s.t = a.t;
    return s;
  }

  std::unique_ptr<Evaluator> a_, b_;
  std::size_t da_;
};

Series columns(const Series& y, std::size_t from, std::size_t count) {
  Series out(count);
  out.reserve(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) out.push_back(y[t].subspan(from, count));
  return out;
}

}  // namespace

ProductModel::ProductModel(std::shared_ptr<const Model> a, std::shared_ptr<const Model> b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (!a_ || !b_) throw Error(Errc::InvalidConfig, "product needs two component models", "model");
}

std::vector<std::string> ProductModel::param_names() const {
  std::vector<std::string> out;
  for (const auto& s : a_->param_names()) out.push_back("a." + s);
  for (const auto& s : b_->param_names()) out.push_back("b." + s);
  return out;
}

Vec ProductModel::join(const Vec& ta, const Vec& tb) {
  Vec th(ta.size() + tb.size());
  th << ta, tb;
  return th;
}

void ProductModel::validate(const Vec& theta) const {
  check_dim(theta);
  a_->validate(theta_a(theta));
  b_->validate(theta_b(theta));
}

std::unique_ptr<Evaluator> ProductModel::bind(const Vec& theta, int order) const {
  check_order(order);
  check_dim(theta);
  return std::make_unique<ProductEvaluator>(a_->bind(theta_a(theta), 0), b_->bind(theta_b(theta), 0),
                                            a_->obs_dim());
}

void ProductModel::simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int> x0,
                                 Trajectory& out) const {
  validate(theta);
  Trajectory ta, tb;
  Rng ra = rng.split(0), rb = rng.split(1);
  ta.y = Series(a_->obs_dim());
  tb.y = Series(b_->obs_dim());
  a_->simulate_into(theta_a(theta), n, ra, x0, ta);
  b_->simulate_into(theta_b(theta), n, rb, x0, tb);
  const std::size_t da = a_->obs_dim(), db = b_->obs_dim();
  std::vector<double> row(da + db);
  for (std::size_t t = 0; t < n; ++t) {
    std::copy_n(ta.y[t].begin(), da, row.begin());
    std::copy_n(tb.y[t].begin(), db, row.begin() + static_cast<std::ptrdiff_t>(da));
    out.y.push_back(Obs(row));
  }
}

Series ProductModel::part_a(const Series& y) const { return columns(y, 0, a_->obs_dim()); }
Series ProductModel::part_b(const Series& y) const { return columns(y, a_->obs_dim(), b_->obs_dim()); }

}  // namespace ghmm
