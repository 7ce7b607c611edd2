#include "ghmm/filter.hpp"

#include "ghmm/error.hpp"

namespace ghmm {

FilterState init_filter(const Model& model, const Vec& theta, Obs y0) {
  return model.bind(theta, 0)->init(y0);
}

FilterState filter_step(const Model& model, const Vec& theta, const FilterState& state, Obs y_prev,
                        Obs y_t) {
  FilterState next = state;
  model.bind(theta, 0)->step(next, y_prev, y_t);
  return next;
}

namespace {

template <class OnStep>
void run_filter(const Model& model, const Vec& theta, const Series& y, OnStep&& on_step) {
  if (y.empty()) throw Error(Errc::TooShort, "empty observation sequence");
  if (y.dim() != model.obs_dim())
    throw Error(Errc::DimensionMismatch, "observation dimension does not match the model");
  const auto ev = model.bind(theta, 0);
  std::size_t t = 0;
  try {
    FilterState s = ev->init(y[0]);
    on_step(s);
    for (t = 1; t < y.size(); ++t) {
      ev->step(s, y[t - 1], y[t]);
      on_step(s);
    }
  } catch (const Error& e) {
    if (e.index()) throw;
    throw e.with_index(t);
  }
}

}  // namespace

double log_likelihood(const Model& model, const Vec& theta, const Series& y) {
  double total = 0.0;
  run_filter(model, theta, y, [&](const FilterState& s) { total = s.log_norm; });
  return total;
}

std::vector<double> log_increments(const Model& model, const Vec& theta, const Series& y) {
  std::vector<double> out;
  out.reserve(y.size());
  run_filter(model, theta, y, [&](const FilterState& s) { out.push_back(s.last); });
  return out;
}

}  // namespace ghmm
