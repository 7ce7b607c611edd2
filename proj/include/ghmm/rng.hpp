#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ghmm {

/// Splittable random stream. A stream is identified by its key (master seed
/// followed by the chain of child indices used to reach it), so child streams
/// are reproducible regardless of the order in which they are created.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng split(std::uint64_t child) const;

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Index drawn from the cumulative weights `cdf` (last entry is the total).
  int categorical(const double* cdf, int n);

  std::uint64_t seed() const { return key_.front(); }

 private:
  explicit Rng(std::vector<std::uint64_t> key);
  void reseed();

  std::vector<std::uint64_t> key_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ghmm
