#pragma once

#include "lscrit/model.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace lscrit {

/// Inverse-temperature schedule beta = beta0 / log(n).
struct TemperSpec {
  double beta0 = 1.0;
  bool untempered = false;  // when set, beta = 1 exactly

  static TemperSpec tempered(double beta0);
  static TemperSpec beta_one();

  /// Resolved beta for a sample of size n; tempered schedules reject n < 3
  /// (the asymptotic regime is meaningless there).
  double beta_for(int n) const;
};

struct ChainConfig {
  int chains = 4;
  int warmup = 2000;
  int draws = 2000;  // post-warmup iterations per chain
  int thin = 1;
  std::uint64_t seed = 0;
  double initial_scale = 0.5;
};

/// Ordered draws from the tempered posterior, merged in chain-id order.
/// Invariant: tempered_logpost[k] == beta * untempered_loglik[k] + log_prior(draws[k]).
struct PosteriorSamples {
  ModelFamily family;
  std::vector<Eigen::VectorXd> draws;
  std::vector<double> tempered_logpost;
  std::vector<double> untempered_loglik;  // sum_i log p(x_i | theta_k)
  std::vector<int> chain_id;
  std::vector<double> acceptance_rate;  // post-warmup, per chain
  double beta = 1.0;
  double beta0 = std::numeric_limits<double>::quiet_NaN();  // NaN when untempered
  bool untempered = true;
  int n_data = 0;

  std::size_t size() const { return draws.size(); }
};

struct Diagnostics {
  std::vector<std::string> names;
  std::vector<double> r_hat;
  std::vector<double> ess;
  double max_r_hat = std::numeric_limits<double>::quiet_NaN();
  double min_ess = std::numeric_limits<double>::quiet_NaN();
};

/// Adaptive random-walk Metropolis on the unconstrained parameterization.
/// Chains are initialized from the prior, adapted toward 0.234 acceptance
/// during warmup (Robbins-Monro on the log step size), and frozen afterwards.
/// Deterministic given cfg.seed; chains use derived sub-seeds.
PosteriorSamples run_chains(const ModelFamily& family, const Dataset& data,
                            const TemperSpec& temper, const ChainConfig& cfg);

/// Arithmetic mean of f over all retained draws, in stored order.
double posterior_expectation(const PosteriorSamples& samples,
                             const std::function<double(const Eigen::VectorXd&)>& f);

/// Split rank-normalized R-hat and ESS per scalar summary. For gmm draws the
/// summaries are permutation-invariant (sorted first mean coordinate per
/// component plus the per-draw log-likelihood) to avoid label-switching false
/// alarms; other families use the natural coordinates plus the log-likelihood.
Diagnostics diagnose(const PosteriorSamples& samples);

/// Autocorrelation-adjusted standard error of the mean of a stored per-draw
/// series (values grouped by chain in stored order).
double mcse_of_mean(const std::vector<double>& values, const std::vector<int>& chain_id,
                    int chains);

/// Draw dump: chain, iter, tempered_logpost, untempered_loglik, then the
/// natural parameter coordinates in declared order.
std::string draws_to_csv(const PosteriorSamples& samples);

}  // namespace lscrit
