#pragma once

#include "lscrit/sampler.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lscrit {

enum class Criterion { LS, WBIC, SBIC };
std::string criterion_name(Criterion c);
Criterion criterion_from_name(const std::string& name);

enum class LambdaSource { exact, estimated, bound };
std::string lambda_source_name(LambdaSource s);
LambdaSource lambda_source_from_name(const std::string& name);

struct DiagSummary {
  double ess_min = std::numeric_limits<double>::quiet_NaN();
  double rhat_max = std::numeric_limits<double>::quiet_NaN();
};

struct CriterionResult {
  Criterion criterion = Criterion::LS;
  double value = 0.0;
  std::optional<double> lambda_used;
  std::optional<LambdaSource> lambda_source;
  std::optional<double> beta0_used;  // WBIC only
  int n = 0;
  DiagSummary diag;
};

/// Two-temperature learning-coefficient estimate.
struct LambdaEstimate {
  double lambda_hat = 0.0;
  std::array<double, 2> beta0_pair{};
  std::array<double, 2> wbic_pair{};
  int n = 0;
  bool negative_warning = false;  // lambda > 0 in theory; MC noise may violate it
};

/// Posterior mean of the total negative log-likelihood over a tempered run.
CriterionResult wbic(const PosteriorSamples& samples_at_beta, const ModelFamily& family,
                     const Dataset& data);

/// Empirical loss T_n = (1/n) sum_i -log[(1/S) sum_s p(x_i | theta_s)] over a
/// beta = 1 run; per-draw per-datum log-likelihoods are computed fresh.
double empirical_loss(const PosteriorSamples& samples_at_one, const ModelFamily& family,
                      const Dataset& data);

/// LS = n * T_n + lambda * log(n). The value is computed exactly in that
/// order, so it is bit-reproducible from (T_n, lambda, n).
CriterionResult ls(double t_n, double lambda, LambdaSource source, int n);

/// sBIC (simplified form) = nll_at_plugin + lambda * log(n).
CriterionResult sbic(double nll_at_plugin, double lambda, LambdaSource source, int n);

/// lambda = (WBIC_1 - WBIC_2) / (log(n) * (1/beta0_1 - 1/beta0_2)).
double lambda_hat_from_wbic(double wbic1, double wbic2, double beta0_1, double beta0_2, int n);

/// Runs two tempered chains (distinct derived sub-seeds) and applies the
/// two-temperature formula.
LambdaEstimate lambda_hat(const ModelFamily& family, const Dataset& data,
                          std::pair<double, double> beta0_pair, const ChainConfig& cfg);

struct ModelCandidate {
  std::string id;
  int param_count = 0;
  CriterionResult result;
};

/// Index of the argmin candidate; ties break toward fewer parameters.
std::size_t select_model(const std::vector<ModelCandidate>& candidates);

// Optional maximum-likelihood plug-ins for sBIC comparison.

/// EM for the unit-covariance mixture; best of `restarts` random starts.
Eigen::VectorXd fit_gmm_em(const ModelFamily& family, const Dataset& data, int restarts,
                           int max_iter, std::uint64_t seed);

/// Closed-form reduced-rank MLE: OLS followed by rank-H truncation in the
/// input-covariance metric.
Eigen::VectorXd fit_rrr_mle(const ModelFamily& family, const Dataset& data);

/// Family dispatch (EM / closed form / clipped sample mean).
Eigen::VectorXd fit_mle(const ModelFamily& family, const Dataset& data, std::uint64_t seed);

}  // namespace lscrit
