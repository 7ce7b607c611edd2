#pragma once

#include "ghmm/multi_index.hpp"
#include "ghmm/rng.hpp"
#include "ghmm/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ghmm {

/// Normalized forward filter. For finite models `weights` is the filter
/// distribution over hidden states; continuous families store their
/// sufficient statistics here (GARCH: next σ²; LSSM: predicted mean then
/// the predicted covariance, column-major).
struct FilterState {
  Vec weights;
  double log_norm = 0.0;
  std::size_t t = 0;
  double last = 0.0;  ///< log of the latest normalizer, exactly as added to log_norm
};

/// Derivative filters up to order r for every multi-index in `index`.
/// `w[k]` is the model statistic differentiated by multi-index k, divided by
/// the same normalizer as the base filter (w[0] equals base.weights).
/// `dlog[k]` is the cumulative derivative D^k log L, with dlog[0] = log L.
struct DerivBundle {
  int order = 0;
  std::shared_ptr<const MultiIndexSet> index;
  FilterState base;
  std::vector<Vec> w;
  Vec dlog;
};

/// A model bound to one parameter value and a derivative order.
class Evaluator {
 public:
  explicit Evaluator(int order) : order_(order) {}
  virtual ~Evaluator() = default;

  int order() const { return order_; }

  virtual FilterState init(Obs y0) const = 0;
  virtual void step(FilterState& state, Obs y_prev, Obs y_t) const = 0;

  virtual DerivBundle init_deriv(Obs y0) const = 0;
  virtual void step_deriv(DerivBundle& bundle, Obs y_prev, Obs y_t) const = 0;

 private:
  int order_;
};

struct Trajectory {
  Series y;
  std::vector<int> x;  ///< hidden path, finite models only
  Vec theta;
  std::uint64_t seed = 0;
  std::size_t n() const { return y.size(); }
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string family() const = 0;
  virtual int param_dim() const = 0;
  virtual std::size_t obs_dim() const { return 1; }
  /// Highest derivative order for which analytic derivatives are available.
  virtual int max_order() const = 0;
  /// Size of a finite hidden space; empty for continuous families.
  virtual std::optional<int> hidden_size() const { return std::nullopt; }
  virtual std::vector<std::string> param_names() const;

  /// Throws a validation Error if θ lies outside the admissible region.
  virtual void validate(const Vec& theta) const = 0;
  /// Validates θ and prepares tables for filtering. Throws UnsupportedOrder if
  /// `order` exceeds max_order().
  virtual std::unique_ptr<Evaluator> bind(const Vec& theta, int order) const = 0;

  /// Appends n observations (and the hidden path when finite) to `out`.
  virtual void simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int> x0,
                             Trajectory& out) const = 0;

  /// Unconstrained coordinates used by the optimizer, and dθ/du.
  virtual Vec to_free(const Vec& theta) const { return theta; }
  virtual Vec from_free(const Vec& u) const { return u; }
  virtual Mat free_jacobian(const Vec& u) const;

 protected:
  void check_order(int order) const;
  void check_dim(const Vec& theta) const;
};

}  // namespace ghmm
