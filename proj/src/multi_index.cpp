#include "ghmm/multi_index.hpp"

#include "ghmm/error.hpp"

#include <algorithm>
#include <tuple>

namespace ghmm {

namespace {

void append_degree(int q, int degree, int start, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == degree) {
    out.push_back(cur);
    return;
  }
  for (int a = start; a < q; ++a) {
    cur.push_back(a);
    append_degree(q, degree, a, cur, out);
    cur.pop_back();
  }
}

}  // namespace

long long multi_index_count(int q, int r) {
  long long c = 1;
  for (int i = 1; i <= r; ++i) c = c * (q + i) / i;
  return c;
}

MultiIndexSet::MultiIndexSet(int q, int r) : q_(q), r_(r) {
  if (q < 0) throw Error(Errc::InvalidParameter, "negative parameter dimension");
  if (r < 0 || r > 3) throw Error(Errc::UnsupportedOrder, "derivative order must lie in 0..3");
  for (int d = 0; d <= r; ++d) {
    std::vector<int> cur;
    append_degree(q, d, 0, cur, parts_);
  }
  for (int k = 0; k < size(); ++k) lookup_.emplace(parts_[k], k);

  pair_index_.assign(static_cast<std::size_t>(q) * q, -1);
  if (r >= 2)
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) pair_index_[a * q + b] = lookup_.at({std::min(a, b), std::max(a, b)});

  splits2_.resize(size());
  std::map<std::tuple<int, int, int>, double> three;
  for (int k = 0; k < size(); ++k) {
    const auto& nu = parts_[k];
    const int s = static_cast<int>(nu.size());

    std::map<std::pair<int, int>, double> two;
    for (int mask = 0; mask < (1 << s); ++mask) {
      std::vector<int> a, b;
      for (int i = 0; i < s; ++i) (mask >> i & 1 ? a : b).push_back(nu[i]);
      two[{lookup_.at(a), lookup_.at(b)}] += 1.0;
    }
    for (const auto& [key, c] : two) splits2_[k].push_back({key.first, key.second, c});

    int combos = 1;
    for (int i = 0; i < s; ++i) combos *= 3;
    for (int code = 0; code < combos; ++code) {
      std::vector<int> h, p, f;
      int c = code;
      for (int i = 0; i < s; ++i, c /= 3) (c % 3 == 0 ? h : c % 3 == 1 ? p : f).push_back(nu[i]);
      three[{lookup_.at(h), lookup_.at(p), lookup_.at(f) * size() + k}] += 1.0;
    }
  }

  std::map<std::pair<int, int>, std::vector<FanOut>> grouped;
  for (const auto& [key, c] : three) {
    auto [h, p, fk] = key;
    grouped[{h, p}].push_back({fk / size(), fk % size(), c});
  }
  for (auto& [hp, terms] : grouped) groups3_.push_back({hp.first, hp.second, std::move(terms)});
}

int MultiIndexSet::find(std::vector<int> parts) const {
  std::sort(parts.begin(), parts.end());
  auto it = lookup_.find(parts);
  return it == lookup_.end() ? -1 : it->second;
}

int MultiIndexSet::pair(int a, int b) const {
  if (r_ < 2) throw Error(Errc::UnsupportedOrder, "second-order index requested from a lower-order set");
  return pair_index_[a * q_ + b];
}

int MultiIndexSet::triple(int a, int b, int c) const {
  if (r_ < 3) throw Error(Errc::UnsupportedOrder, "third-order index requested from a lower-order set");
  return find({a, b, c});
}

}  // namespace ghmm
