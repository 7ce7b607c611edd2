#include "ghmm/types.hpp"

#include "ghmm/error.hpp"

namespace ghmm {

Series::Series(std::size_t dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 || values_.size() % dim_ != 0)
    throw Error(Errc::DimensionMismatch, "series length is not a multiple of its dimension");
}

void Series::push_back(Obs y) {
  if (y.size() != dim_) throw Error(Errc::DimensionMismatch, "observation has wrong dimension");
  values_.insert(values_.end(), y.begin(), y.end());
}

void Series::push_back(double y) {
  if (dim_ != 1) throw Error(Errc::DimensionMismatch, "scalar push into a vector series");
  values_.push_back(y);
}

Series Series::head(std::size_t n) const {
  Series out(dim_);
  out.values_.assign(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(n * dim_));
  return out;
}

Series symbols(const std::vector<int>& ys) {
  Series s(1);
  s.reserve(ys.size());
  for (int y : ys) s.push_back(static_cast<double>(y));
  return s;
}

}  // namespace ghmm
