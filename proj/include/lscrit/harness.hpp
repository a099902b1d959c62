#pragma once

#include "lscrit/criteria.hpp"
#include "lscrit/lambda_coeff.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace lscrit {

enum class LambdaPolicy { automatic, exact, estimated, bound };
std::string lambda_policy_name(LambdaPolicy p);
LambdaPolicy lambda_policy_from_name(const std::string& name);

/// Full description of one experiment: data generation, candidate set,
/// temperature grid, lambda source policy, and MCMC settings.
struct ExperimentConfig {
  std::string name = "custom";
  FamilyKind kind = FamilyKind::gmm;
  int output_dim = 1;          // N
  int input_dim = 0;           // M (rrr)
  int true_components = 1;     // H* (gmm) / hidden units of the generating net (rrr)
  int true_rank = -1;          // rrr: rank(B* A*)
  double prior_tau2 = 1.0;     // normal_mean_conj
  Eigen::VectorXd true_params; // packed for the generating family
  int n = 100;
  std::vector<int> candidates; // H per candidate (gmm/rrr); {1} for normal mean
  std::vector<double> beta0_list;
  LambdaPolicy lambda_policy = LambdaPolicy::estimated;
  std::pair<double, double> lambda_beta0_pair = {1.0, 1.5};
  std::vector<Criterion> criteria = {Criterion::LS, Criterion::WBIC, Criterion::SBIC};
  std::string plugin = "map";  // sBIC plug-in: "map" (posterior MAP) or "mle"
  ChainConfig chains;
  std::uint64_t seed = 1;
};

/// One (candidate, criterion, beta0) cell of the report.
struct ReportRow {
  std::string candidate;
  Criterion criterion = Criterion::LS;
  double value = 0.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();  // NaN for WBIC rows
  std::string lambda_source;                                 // empty for WBIC rows
  double beta0 = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  double ess_min = std::numeric_limits<double>::quiet_NaN();
  double rhat_max = std::numeric_limits<double>::quiet_NaN();
  bool selected = false;

  bool operator==(const ReportRow&) const = default;
};

/// Everything computed for a single candidate model on a fixed dataset.
struct CandidateOutcome {
  std::string id;
  ModelFamily family;
  double t_n = 0.0;                       // empirical loss from the beta=1 run
  double nll_plugin = 0.0;                // nll at the sBIC plug-in point
  double lambda = 0.0;
  LambdaSource lambda_source = LambdaSource::estimated;
  std::map<double, CriterionResult> wbic_by_beta0;
  DiagSummary beta1_diag;
};

std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

/// Parses a JSON config, or a bare preset name. Unknown keys are an error
/// (listed in the message); a "preset" key loads the preset and applies the
/// remaining keys as overrides.
ExperimentConfig parse_config(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

ModelFamily generating_family(const ExperimentConfig& cfg);
ModelFamily candidate_family(const ExperimentConfig& cfg, int candidate);
Dataset generate_data(const ExperimentConfig& cfg);

CandidateOutcome run_candidate(const ExperimentConfig& cfg, const Dataset& data,
                               int candidate_index);

/// Generates data once, evaluates every candidate, marks the argmin per
/// (criterion, beta0), and orders rows by (candidate, criterion, beta0).
/// Deterministic given cfg.seed.
std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg);

enum class ReportFormat { csv, json };
ReportFormat report_format_from_name(const std::string& name);

std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format);
std::vector<ReportRow> parse_report(const std::string& text, ReportFormat format);

/// Single-result JSON object for the `criteria` subcommand.
std::string criterion_report_json(const CriterionResult& result, const std::string& candidate,
                                  std::uint64_t seed);

}  // namespace lscrit
