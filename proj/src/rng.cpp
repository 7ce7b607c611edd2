#include "ghmm/rng.hpp"

#include <cmath>

namespace ghmm {

Rng::Rng(std::uint64_t seed) : key_{seed} { reseed(); }

Rng::Rng(std::vector<std::uint64_t> key) : key_(std::move(key)) { reseed(); }

void Rng::reseed() {
  std::vector<std::uint32_t> words;
  words.reserve(2 * key_.size() + 1);
  words.push_back(static_cast<std::uint32_t>(key_.size()));
  for (auto k : key_) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

Rng Rng::split(std::uint64_t child) const {
  auto key = key_;
  key.push_back(child);
  return Rng(std::move(key));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

int Rng::categorical(const double* cdf, int n) {
  const double u = uniform() * cdf[n - 1];
  for (int i = 0; i < n - 1; ++i)
    if (u < cdf[i]) return i;
  return n - 1;
}

}  // namespace ghmm
