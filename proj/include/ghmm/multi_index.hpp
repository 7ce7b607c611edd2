#pragma once

#include <map>
#include <vector>

namespace ghmm {

/// All multi-indices of total degree <= r over q parameters, in graded
/// lexicographic order. A multi-index is stored as the sorted multiset of the
/// parameter indices it differentiates by, so {0,0,2} means d^3/dθ0²dθ2.
/// Position 0 is always the empty multi-index.
class MultiIndexSet {
 public:
  MultiIndexSet(int q, int r);

  int params() const { return q_; }
  int order() const { return r_; }
  int size() const { return static_cast<int>(parts_.size()); }

  const std::vector<int>& parts(int k) const { return parts_[k]; }
  int degree(int k) const { return static_cast<int>(parts_[k].size()); }

  /// Position of a multiset (any order of entries), or -1 if outside the set.
  int find(std::vector<int> parts) const;
  int unit(int a) const { return 1 + a; }
  int pair(int a, int b) const;
  int triple(int a, int b, int c) const;

  /// Leibniz terms for a product of three factors h·p·f: for target k,
  /// D^k(hpf) = Σ coeff · D^h h · D^p p · D^f f. Grouped by the (h, p) pair so
  /// that a caller can form the h·p product once and fan out over f.
  struct FanOut {
    int f;
    int target;
    double coeff;
  };
  struct Group {
    int h;
    int p;
    std::vector<FanOut> terms;
  };
  const std::vector<Group>& leibniz3() const { return groups3_; }

  /// Two-factor Leibniz terms for target k: pairs (first, second, coeff).
  struct Split {
    int first;
    int second;
    double coeff;
  };
  const std::vector<Split>& splits(int k) const { return splits2_[k]; }

 private:
  int q_;
  int r_;
  std::vector<std::vector<int>> parts_;
  std::map<std::vector<int>, int> lookup_;
  std::vector<int> pair_index_;
  std::vector<std::vector<Split>> splits2_;
  std::vector<Group> groups3_;
};

/// Number of multi-indices with |ν| <= r over q parameters: C(r+q, q).
long long multi_index_count(int q, int r);

}  // namespace ghmm
