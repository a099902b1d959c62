#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace lscrit {

inline const double kLogTwoPi = 1.8378770664093454836;

/// log(sum_i exp(v_i)) with max-shift; -inf entries are skipped, all -inf -> -inf.
double log_sum_exp(std::span<const double> values);

/// Log density of N(mean, var) at x.
double log_normal_pdf(double x, double mean, double var);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

/// Stable sub-seed derivation: adding streams/keys never perturbs other streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t key);

std::uint64_t double_key(double value);

/// Shortest-lossless decimal formatting (%.17g); round-trips bit-exactly via strtod.
std::string format_double(double value);

/// Deterministic RNG with pinned algorithms for cross-run reproducibility.
/// Normal draws use cached Box-Muller so the stream is a pure function of the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform draw in [0, 1).
  double uniform();

  /// Standard normal draw.
  double normal();

  /// Index h with probability weights[h]; weights must sum to ~1.
  int categorical(const Eigen::VectorXd& weights);

  /// Uniform draw from the (k-1)-simplex.
  Eigen::VectorXd simplex(int k);

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace lscrit
