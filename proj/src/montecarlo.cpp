#include "ghmm/montecarlo.hpp"

#include "ghmm/error.hpp"
#include "ghmm/format.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace ghmm {

Trajectory simulate(const Model& model, const Vec& theta, std::size_t n, Rng& rng, std::optional<int> x0) {
  Trajectory traj;
  traj.y = Series(model.obs_dim());
  traj.theta = theta;
  traj.seed = rng.seed();
  model.simulate_into(theta, n, rng, x0, traj);
  return traj;
}

Trajectory simulate(const Model& model, const Vec& theta, std::size_t n, std::uint64_t seed,
                    std::optional<int> x0) {
  Rng rng(seed);
  return simulate(model, theta, n, rng, x0);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t d = traj.y.dim();
  const bool hidden = traj.x.size() == traj.y.size() && !traj.x.empty();
  os << "t";
  for (std::size_t j = 0; j < d; ++j) os << ",y" << j + 1;
  if (hidden) os << ",x";
  os << '\n';
  for (std::size_t t = 0; t < traj.y.size(); ++t) {
    os << t;
    for (std::size_t j = 0; j < d; ++j) {
      os << ',';
      write_number(os, traj.y.at(t, j));
    }
    if (hidden) os << ',' << traj.x[t];
    os << '\n';
  }
}

BatchAccumulator::BatchAccumulator(std::size_t length, std::size_t dim, int batches)
    : length_(length), dim_(dim), batches_(batches), total_(dim, 0.0), current_(dim, 0.0) {
  if (batches < 2 || length < static_cast<std::size_t>(batches))
    throw Error(Errc::TooShort, "averaging window of " + std::to_string(length) + " steps cannot fill " +
                                    std::to_string(batches) + " batches");
  batch_end_ = length_ / static_cast<std::size_t>(batches_);
}

void BatchAccumulator::add(const double* x) {
  if (seen_ >= length_) throw Error(Errc::TooLarge, "more values than the declared window length");
  for (std::size_t j = 0; j < dim_; ++j) {
    total_[j] += x[j];
    current_[j] += x[j];
  }
  ++seen_;
  if (seen_ == batch_end_) {
    const std::size_t start = static_cast<std::size_t>(batch_) * length_ / static_cast<std::size_t>(batches_);
    const double len = static_cast<double>(batch_end_ - start);
    std::vector<double> m(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
      m[j] = current_[j] / len;
      current_[j] = 0.0;
    }
    batch_means_.push_back(std::move(m));
    ++batch_;
    batch_end_ = static_cast<std::size_t>(batch_ + 1) * length_ / static_cast<std::size_t>(batches_);
  }
}

Vec BatchAccumulator::mean() const {
  Vec m(dim_);
  for (std::size_t j = 0; j < dim_; ++j) m(j) = total_[j] / static_cast<double>(seen_);
  return m;
}

Vec BatchAccumulator::se() const {
  if (batch_means_.size() != static_cast<std::size_t>(batches_))
    throw Error(Errc::TooShort, "batch means requested before the window was filled");
  Vec out(dim_);
  const double B = batches_;
  for (std::size_t j = 0; j < dim_; ++j) {
    double mu = 0.0;
    for (const auto& b : batch_means_) mu += b[j];
    mu /= B;
    double ss = 0.0;
    for (const auto& b : batch_means_) ss += (b[j] - mu) * (b[j] - mu);
    out(j) = std::sqrt(ss / (B - 1.0)) / std::sqrt(B);
  }
  return out;
}

BatchMeans long_run_average(std::span<const double> stream, std::size_t burn_in, int batches) {
  if (stream.size() <= burn_in) throw Error(Errc::TooShort, "stream is not longer than the burn-in");
  BatchAccumulator acc(stream.size() - burn_in, 1, batches);
  for (std::size_t t = burn_in; t < stream.size(); ++t) acc.add(&stream[t]);
  return {acc.mean()(0), acc.se()(0), stream.size() - burn_in};
}

double exhaustive_likelihood(const FiniteModel& model, const Vec& theta, const std::vector<int>& y) {
  const FiniteTables t = model.tables(theta, 0);
  const std::size_t n = y.size();
  if (n == 0) throw Error(Errc::TooShort, "empty observation sequence");
  const int D = t.states;
  double paths = 1.0;
  for (std::size_t i = 0; i < n; ++i) paths *= D;
  if (paths > 1e7) throw Error(Errc::TooLarge, "more than 10^7 hidden paths");
  for (int s : y)
    if (s < 1 || s > t.symbols) throw Error(Errc::InvalidObservation, "symbol out of range");

  std::vector<int> x(n, 0);
  long double total = 0.0L;
  while (true) {
    long double p = t.init[0](x[0]) * t.B[0](x[0], y[0] - 1);
    for (std::size_t i = 1; i < n && p != 0.0L; ++i) p *= t.P[0](x[i - 1], x[i]) * t.B[0](x[i], y[i] - 1);
    total += p;
    std::size_t i = 0;
    while (i < n && ++x[i] == D) x[i++] = 0;
    if (i == n) break;
  }
  return static_cast<double>(total);
}

double enumerate_expectation(const FiniteModel& model, const Vec& theta,
                             const std::function<double(const std::vector<int>&)>& functional,
                             std::size_t n) {
  const FiniteTables t = model.tables(theta, 0);
  const int D = t.states;
  const int A = t.symbols;
  double count = 1.0;
  for (std::size_t i = 0; i <= n; ++i) count *= A;
  if (count > 1e6) throw Error(Errc::TooLarge, "more than 10^6 observation sequences");

  using LVec = std::vector<long double>;
  std::vector<LVec> alpha(n + 1, LVec(D));
  std::vector<int> y(n + 1, 1);
  long double total = 0.0L;

  std::function<void(std::size_t)> visit = [&](std::size_t depth) {
    for (int s = 1; s <= A; ++s) {
      y[depth] = s;
      LVec& a = alpha[depth];
      for (int x = 0; x < D; ++x) {
        long double v = 0.0L;
        if (depth == 0) {
          v = t.init[0](x);
        } else {
          for (int z = 0; z < D; ++z) v += alpha[depth - 1][z] * t.P[0](z, x);
        }
        a[x] = v * t.B[0](x, s - 1);
      }
      if (depth == n) {
        long double L = 0.0L;
        for (int x = 0; x < D; ++x) L += a[x];
        if (L != 0.0L) total += L * functional(y);
      } else {
        visit(depth + 1);
      }
    }
  };
  visit(0);
  return static_cast<double>(total);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(count, threads < 1 ? 1 : static_cast<std::size_t>(threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  // The lowest failing index wins so the rethrown error does not depend on scheduling.
  std::exception_ptr failure;
  std::size_t failed_at = count;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ghmm
