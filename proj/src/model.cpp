#include "ghmm/model.hpp"

#include "ghmm/error.hpp"

namespace ghmm {

std::vector<std::string> Model::param_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < param_dim(); ++i) names.push_back("theta[" + std::to_string(i) + "]");
  return names;
}

Mat Model::free_jacobian(const Vec& u) const { return Mat::Identity(u.size(), u.size()); }

void Model::check_order(int order) const {
  if (order < 0 || order > max_order())
    throw Error(Errc::UnsupportedOrder, family() + " supports derivative order up to " +
                                            std::to_string(max_order()) + ", requested " +
                                            std::to_string(order));
}

void Model::check_dim(const Vec& theta) const {
  if (theta.size() != param_dim())
    throw Error(Errc::DimensionMismatch, family() + " expects " + std::to_string(param_dim()) +
                                             " parameters, got " + std::to_string(theta.size()),
                "model.theta");
}

}  // namespace ghmm
