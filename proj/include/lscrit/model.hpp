#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace lscrit {

class Rng;

enum class FamilyKind { gmm, rrr, normal_mean, normal_mean_conj };

/// A model family fixes the distributional form, its dimensions, and the prior:
///   gmm(H, N)        mixture of H unit-covariance Gaussians in R^N;
///                    uniform simplex prior on weights, N(0,1) on mean coordinates.
///   rrr(M, N, H)     y = B A x + eps, A in R^{HxM}, B in R^{NxH}, eps ~ N(0, I_N);
///                    N(0,1) prior on every entry of A and B.
///   normal_mean      N(theta, 1) with uniform prior on [-1, 1].
///   normal_mean_conj N(theta, 1) with N(0, tau2) prior (conjugate; oracle target).
struct ModelFamily {
  FamilyKind kind = FamilyKind::normal_mean;
  int components = 1;      // H (gmm mixture size / rrr hidden units)
  int output_dim = 1;      // N
  int input_dim = 0;       // M (rrr only)
  double prior_tau2 = 1.0; // normal_mean_conj prior variance

  static ModelFamily gmm(int components, int output_dim);
  static ModelFamily rrr(int input_dim, int output_dim, int components);
  static ModelFamily normal_mean();
  static ModelFamily normal_mean_conjugate(double tau2);

  /// Length of the packed natural parameter vector.
  int param_dim() const;
  /// Length of the unconstrained sampling-space vector.
  int unconstrained_dim() const;
  /// Natural-order coordinate names ("w1", "mu1_1", "A1_1", "theta", ...).
  std::vector<std::string> param_names() const;
  std::string describe() const;

  bool operator==(const ModelFamily&) const = default;
};

/// Immutable sample of n observations; inputs are present only for rrr data.
struct Dataset {
  Eigen::MatrixXd outputs;  // n x N
  Eigen::MatrixXd inputs;   // n x M, or 0 x 0 when absent

  int n() const { return static_cast<int>(outputs.rows()); }
  int output_dim() const { return static_cast<int>(outputs.cols()); }
  int input_dim() const { return static_cast<int>(inputs.cols()); }
  bool has_inputs() const { return inputs.size() > 0; }
};

/// Typed views of the packed parameter vector (copies; packing order is
/// weights then row-major means for gmm, row-major A then row-major B for rrr).
struct GmmParams {
  Eigen::VectorXd weights;  // H, simplex
  Eigen::MatrixXd means;    // H x N
};
struct RrrParams {
  Eigen::MatrixXd A;  // H x M
  Eigen::MatrixXd B;  // N x H
};

GmmParams unpack_gmm(const ModelFamily& family, const Eigen::VectorXd& theta);
Eigen::VectorXd pack_gmm(const Eigen::VectorXd& weights, const Eigen::MatrixXd& means);
RrrParams unpack_rrr(const ModelFamily& family, const Eigen::VectorXd& theta);
Eigen::VectorXd pack_rrr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Throws invalid_argument on dimension mismatch, non-finite entries, or a
/// gmm weight vector off the simplex (tolerance 1e-12).
void validate_params(const ModelFamily& family, const Eigen::VectorXd& theta);
void validate_dataset(const ModelFamily& family, const Dataset& data);

/// log p(output | theta) for one observation (input required iff rrr).
double log_likelihood_datum(const ModelFamily& family, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& output,
                            const Eigen::VectorXd& input = Eigen::VectorXd());
double log_likelihood_row(const ModelFamily& family, const Eigen::VectorXd& theta,
                          const Dataset& data, int row);

/// sum_i -log p(x_i | theta), accumulated in row order.
double negative_log_likelihood(const ModelFamily& family, const Eigen::VectorXd& theta,
                               const Dataset& data);

double log_prior(const ModelFamily& family, const Eigen::VectorXd& theta);

/// Deterministic simulation: a pure function of (family, true_params, n, seed).
Dataset simulate(const ModelFamily& family, const Eigen::VectorXd& true_params, int n,
                 std::uint64_t seed);

/// Independent draw from the prior (chain initialization).
Eigen::VectorXd draw_from_prior(const ModelFamily& family, Rng& rng);

/// Unconstrained reparameterization used by the sampler: stick-breaking logit
/// transform for gmm weights (with log-Jacobian), identity elsewhere.
Eigen::VectorXd to_unconstrained(const ModelFamily& family, const Eigen::VectorXd& theta);
Eigen::VectorXd from_unconstrained(const ModelFamily& family, const Eigen::VectorXd& u,
                                   double* log_jacobian = nullptr);

/// CSV serialization with header row ("x1..xM,y1..yN" / "y1..yN");
/// values are written losslessly so round-trips are bit-exact.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);

struct PosteriorSamples;

/// MAP over stored beta=1 draws: the plug-in point estimate used by sBIC.
Eigen::VectorXd plug_in_estimate(const ModelFamily& family, const Dataset& data,
                                 const PosteriorSamples& posterior);

}  // namespace lscrit
