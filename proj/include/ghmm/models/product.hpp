#pragma once

#include "ghmm/model.hpp"

#include <memory>

namespace ghmm {

/// Independent pairing (Y¹, Y²) of two models, L = L¹ · L². Observations
/// concatenate the two components, θ = (θ¹, θ²). Only the order-0 filter is
/// provided. Simulation draws component A from rng.split(0) and component B
/// from rng.split(1).
class ProductModel : public Model {
 public:
  ProductModel(std::shared_ptr<const Model> a, std::shared_ptr<const Model> b);

  std::string family() const override { return "product"; }
  int param_dim() const override { return a_->param_dim() + b_->param_dim(); }
  std::size_t obs_dim() const override { return a_->obs_dim() + b_->obs_dim(); }
  int max_order() const override { return 0; }
  std::vector<std::string> param_names() const override;

  void validate(const Vec& theta) const override;
  std::unique_ptr<Evaluator> bind(const Vec& theta, int order) const override;
  void simulate_into(const Vec& theta, std::size_t n, Rng& rng, std::optional<int> x0,
                     Trajectory& out) const override;

  const Model& first() const { return *a_; }
  const Model& second() const { return *b_; }
  Vec theta_a(const Vec& theta) const { return theta.head(a_->param_dim()); }
  Vec theta_b(const Vec& theta) const { return theta.tail(b_->param_dim()); }
  static Vec join(const Vec& ta, const Vec& tb);

  /// Component series of a product series.
  Series part_a(const Series& y) const;
  Series part_b(const Series& y) const;

 private:
  std::shared_ptr<const Model> a_, b_;
};

}  // namespace ghmm
