#pragma once

#include "ghmm/finite_model.hpp"
#include "ghmm/model.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ghmm {

/// Draws X_0 from the model's initial law (or starts at `x0`), then alternates
/// hidden transitions and emissions. Same (model, θ, n, seed) → same output.
Trajectory simulate(const Model& model, const Vec& theta, std::size_t n, std::uint64_t seed,
                    std::optional<int> x0 = std::nullopt);
Trajectory simulate(const Model& model, const Vec& theta, std::size_t n, Rng& rng,
                    std::optional<int> x0 = std::nullopt);

/// CSV with header `t,y1..yd[,x]`.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

struct BatchMeans {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

/// Streaming batch means for a vector-valued stream of known length m. Batch
/// i covers positions [floor(i m / B), floor((i+1) m / B)).
class BatchAccumulator {
 public:
  static constexpr int kDefaultBatches = 20;

  BatchAccumulator(std::size_t length, std::size_t dim, int batches = kDefaultBatches);

  void add(const double* x);
  void add(const Vec& x) { add(x.data()); }

  std::size_t dim() const { return dim_; }
  Vec mean() const;
  /// sd(batch means) / sqrt(B).
  Vec se() const;

 private:
  std::size_t length_, dim_;
  int batches_;
  std::size_t seen_ = 0;
  int batch_ = 0;
  std::size_t batch_end_;
  std::vector<double> total_;
  std::vector<double> current_;
  std::vector<std::vector<double>> batch_means_;
};

/// Mean and batch-means standard error of stream[burn_in..]. TooShort if the
/// window holds fewer than `batches` values.
BatchMeans long_run_average(std::span<const double> stream, std::size_t burn_in,
                            int batches = BatchAccumulator::kDefaultBatches);

/// L(θ; y) by literal summation over all D^n hidden paths. TooLarge above
/// 10^7 paths.
double exhaustive_likelihood(const FiniteModel& model, const Vec& theta, const std::vector<int>& y);

/// Σ_y L(θ; y) · functional(y) over every symbol sequence y of length n + 1.
/// The inner hidden-path sums share prefixes, so the cost is A^{n+1} · D².
/// TooLarge when A^{n+1} > 10^6.
double enumerate_expectation(const FiniteModel& model, const Vec& theta,
                             const std::function<double(const std::vector<int>&)>& functional,
                             std::size_t n);

/// Runs body(i) for i in [0, count) on at most `threads` workers. Results must
/// be written to index-addressed storage so the outcome is schedule-free.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ghmm
