#include "lscrit/criteria.hpp"

#include "lscrit/math_util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace lscrit {

namespace {

constexpr std::uint64_t kLambdaHatStream = 0x6c68ull;
constexpr double kLogPredictiveFloor = -700.0;

DiagSummary try_diagnose(const PosteriorSamples& samples) {
  DiagSummary d;
  try {
    const Diagnostics full = diagnose(samples);
    d.ess_min = full.min_ess;
    d.rhat_max = full.max_r_hat;
  } catch (const std::invalid_argument&) {
    // too few chains/draws; leave NaN
  }
  return d;
}

}  // namespace

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::LS: return "LS";
    case Criterion::WBIC: return "WBIC";
    case Criterion::SBIC: return "sBIC";
  }
  return "?";
}

Criterion criterion_from_name(const std::string& name) {
  if (name == "LS") return Criterion::LS;
  if (name == "WBIC") return Criterion::WBIC;
  if (name == "sBIC") return Criterion::SBIC;
  throw std::invalid_argument("unknown criterion '" + name + "'");
}

std::string lambda_source_name(LambdaSource s) {
  switch (s) {
    case LambdaSource::exact: return "exact";
    case LambdaSource::estimated: return "estimated";
    case LambdaSource::bound: return "bound";
  }
  return "?";
}

LambdaSource lambda_source_from_name(const std::string& name) {
  if (name == "exact") return LambdaSource::exact;
  if (name == "estimated") return LambdaSource::estimated;
  if (name == "bound") return LambdaSource::bound;
  throw std::invalid_argument("unknown lambda source '" + name + "'");
}

CriterionResult wbic(const PosteriorSamples& samples_at_beta, const ModelFamily& family,
                     const Dataset& data) {
  if (samples_at_beta.draws.empty()) throw std::invalid_argument("wbic: empty sample set");
  if (samples_at_beta.untempered)
    throw std::invalid_argument("wbic: requires a tempered run (beta = beta0/log n)");
  if (samples_at_beta.family != family || samples_at_beta.n_data != data.n())
    throw std::invalid_argument("wbic: samples were drawn for a different model or dataset");
  double acc = 0.0;
  for (double ll : samples_at_beta.untempered_loglik) acc += -ll;
  CriterionResult r;
  r.criterion = Criterion::WBIC;
  r.value = acc / static_cast<double>(samples_at_beta.size());
  r.beta0_used = samples_at_beta.beta0;
  r.n = data.n();
  r.diag = try_diagnose(samples_at_beta);
  return r;
}

double empirical_loss(const PosteriorSamples& samples_at_one, const ModelFamily& family,
                      const Dataset& data) {
  const std::size_t S = samples_at_one.size();
  if (S == 0) throw std::invalid_argument("empirical_loss: empty sample set");
  if (!samples_at_one.untempered)
    throw std::invalid_argument("empirical_loss: requires draws at beta = 1");
  if (samples_at_one.family != family || samples_at_one.n_data != data.n())
    throw std::invalid_argument("empirical_loss: samples were drawn for different data");
  validate_dataset(family, data);

  const int n = data.n();
  // Streaming log-sum-exp over draws, one accumulator pair per datum; the
  // exponentials are always of non-positive shifted values.
  std::vector<double> max_ll(n, -std::numeric_limits<double>::infinity());
  std::vector<double> acc(n, 0.0);
  Eigen::MatrixXd coef;
  for (std::size_t s = 0; s < S; ++s) {
    const Eigen::VectorXd& theta = samples_at_one.draws[s];
    const Eigen::MatrixXd* coef_ptr = nullptr;
    if (family.kind == FamilyKind::rrr) {
      const RrrParams p = unpack_rrr(family, theta);
      coef = p.B * p.A;
      coef_ptr = &coef;
    }
    for (int i = 0; i < n; ++i) {
      double ll;
      if (coef_ptr) {
        double q = 0.0;
        for (int j = 0; j < family.output_dim; ++j) {
          double mean = 0.0;
          for (int k = 0; k < family.input_dim; ++k)
            mean += (*coef_ptr)(j, k) * data.inputs(i, k);
          const double d = data.outputs(i, j) - mean;
          q += d * d;
        }
        ll = -0.5 * q - 0.5 * family.output_dim * kLogTwoPi;
      } else {
        ll = log_likelihood_row(family, theta, data, i);
      }
      if (!std::isfinite(ll))
        throw std::runtime_error("empirical_loss: non-finite log-density at datum " +
                                 std::to_string(i));
      if (ll > max_ll[i]) {
        acc[i] = acc[i] * std::exp(max_ll[i] - ll) + 1.0;
        max_ll[i] = ll;
      } else {
        acc[i] += std::exp(ll - max_ll[i]);
      }
    }
  }
  double total = 0.0;
  const double log_s = std::log(static_cast<double>(S));
  for (int i = 0; i < n; ++i) {
    // acc >= 1 (the max draw contributes exp(0)), so lp is finite; the floor
    // only guards degenerate single-draw underflow.
    const double lp = std::max(max_ll[i] + std::log(acc[i]) - log_s, kLogPredictiveFloor);
    total += -lp;
  }
  return total / static_cast<double>(n);
}

CriterionResult ls(double t_n, double lambda, LambdaSource source, int n) {
  if (n < 1) throw std::invalid_argument("ls: n must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ls: lambda must be >= 0");
  if (!std::isfinite(t_n)) throw std::invalid_argument("ls: T_n must be finite");
  CriterionResult r;
  r.criterion = Criterion::LS;
  r.value = n * t_n + lambda * std::log(static_cast<double>(n));
  r.lambda_used = lambda;
  r.lambda_source = source;
  r.n = n;
  return r;
}

CriterionResult sbic(double nll_at_plugin, double lambda, LambdaSource source, int n) {
  if (n < 1) throw std::invalid_argument("sbic: n must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("sbic: lambda must be >= 0");
  if (!std::isfinite(nll_at_plugin))
    throw std::invalid_argument("sbic: plug-in negative log-likelihood must be finite");
  CriterionResult r;
  r.criterion = Criterion::SBIC;
  r.value = nll_at_plugin + lambda * std::log(static_cast<double>(n));
  r.lambda_used = lambda;
  r.lambda_source = source;
  r.n = n;
  return r;
}

double lambda_hat_from_wbic(double wbic1, double wbic2, double beta0_1, double beta0_2, int n) {
  if (beta0_1 == beta0_2)
    throw std::invalid_argument("lambda_hat: beta0 values must be distinct");
  if (n < 3) throw std::invalid_argument("lambda_hat: n must be >= 3");
  const double log_n = std::log(static_cast<double>(n));
  // 1/beta_j = log(n) / beta0_j.
  return (wbic1 - wbic2) / (log_n * (1.0 / beta0_1 - 1.0 / beta0_2));
}

LambdaEstimate lambda_hat(const ModelFamily& family, const Dataset& data,
                          std::pair<double, double> beta0_pair, const ChainConfig& cfg) {
  if (beta0_pair.first == beta0_pair.second)
    throw std::invalid_argument("lambda_hat: beta0 values must be distinct");
  if (data.n() < 3) throw std::invalid_argument("lambda_hat: n must be >= 3");

  LambdaEstimate est;
  est.beta0_pair = {beta0_pair.first, beta0_pair.second};
  est.n = data.n();
  for (int j = 0; j < 2; ++j) {
    const double b0 = est.beta0_pair[j];
    ChainConfig run_cfg = cfg;
    run_cfg.seed = derive_seed(cfg.seed, kLambdaHatStream, double_key(b0));
    const PosteriorSamples samples = run_chains(family, data, TemperSpec::tempered(b0), run_cfg);
    est.wbic_pair[j] = wbic(samples, family, data).value;
  }
  est.lambda_hat = lambda_hat_from_wbic(est.wbic_pair[0], est.wbic_pair[1], est.beta0_pair[0],
                                        est.beta0_pair[1], est.n);
  if (est.lambda_hat < 0.0) {
    est.negative_warning = true;
    std::cerr << "[lscrit] warning: negative lambda_hat " << est.lambda_hat
              << " (Monte-Carlo noise)\n";
  }
  return est;
}

std::size_t select_model(const std::vector<ModelCandidate>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_model: no candidates");
  for (const auto& c : candidates)
    if (c.result.criterion != candidates.front().result.criterion)
      throw std::invalid_argument("select_model: mixed criterion names");
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double v = candidates[k].result.value;
    const double bv = candidates[best].result.value;
    if (v < bv || (v == bv && candidates[k].param_count < candidates[best].param_count)) best = k;
  }
  return best;
}

Eigen::VectorXd fit_gmm_em(const ModelFamily& family, const Dataset& data, int restarts,
                           int max_iter, std::uint64_t seed) {
  if (family.kind != FamilyKind::gmm) throw std::invalid_argument("fit_gmm_em: gmm family only");
  validate_dataset(family, data);
  if (restarts < 1 || max_iter < 1)
    throw std::invalid_argument("fit_gmm_em: restarts and max_iter must be >= 1");
  const int n = data.n(), H = family.components, N = family.output_dim;

  Eigen::VectorXd best_theta;
  double best_ll = -std::numeric_limits<double>::infinity();
  Rng rng(derive_seed(seed, 0x656dull, 0));

  for (int rs = 0; rs < restarts; ++rs) {
    // Distinct random data rows as initial means.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int h = 0; h < H; ++h) {
      const int j = h + static_cast<int>(rng.uniform() * (n - h));
      std::swap(idx[h], idx[std::min(j, n - 1)]);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(H, 1.0 / H);
    Eigen::MatrixXd mu(H, N);
    for (int h = 0; h < H; ++h) mu.row(h) = data.outputs.row(idx[h]);

    double prev_ll = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd resp(n, H);
    for (int it = 0; it < max_iter; ++it) {
      // E step in log space.
      double ll = 0.0;
      for (int i = 0; i < n; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (int h = 0; h < H; ++h) {
          const double lw = w[h] > 0.0 ? std::log(w[h]) : -std::numeric_limits<double>::infinity();
          const double q = (data.outputs.row(i) - mu.row(h)).squaredNorm();
          resp(i, h) = lw - 0.5 * q;
          m = std::max(m, resp(i, h));
        }
        double acc = 0.0;
        for (int h = 0; h < H; ++h)
          if (std::isfinite(resp(i, h))) acc += std::exp(resp(i, h) - m);
        const double lse = m + std::log(acc);
        ll += lse - 0.5 * N * kLogTwoPi;
        for (int h = 0; h < H; ++h)
          resp(i, h) = std::isfinite(resp(i, h)) ? std::exp(resp(i, h) - lse) : 0.0;
      }
      // M step.
      for (int h = 0; h < H; ++h) {
        const double nh = resp.col(h).sum();
        w[h] = nh / n;
        if (nh > 1e-12) mu.row(h) = (resp.col(h).transpose() * data.outputs) / nh;
      }
      if (ll - prev_ll < 1e-9 * (1.0 + std::abs(ll)) && it > 0) {
        prev_ll = ll;
        break;
      }
      prev_ll = ll;
    }
    if (prev_ll > best_ll) {
      best_ll = prev_ll;
      // Renormalize against accumulated round-off before packing.
      w /= w.sum();
      best_theta = pack_gmm(w, mu);
    }
  }
  return best_theta;
}

Eigen::VectorXd fit_rrr_mle(const ModelFamily& family, const Dataset& data) {
  if (family.kind != FamilyKind::rrr) throw std::invalid_argument("fit_rrr_mle: rrr family only");
  validate_dataset(family, data);
  const int H = family.components;
  const double n = data.n();
  const Eigen::MatrixXd sxx = data.inputs.transpose() * data.inputs / n;
  const Eigen::MatrixXd sxy = data.inputs.transpose() * data.outputs / n;  // M x N
  const Eigen::MatrixXd c_ols = sxx.ldlt().solve(sxy).transpose();         // N x M

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sxx);
  const Eigen::MatrixXd w = es.operatorSqrt();
  const Eigen::MatrixXd w_inv = es.operatorInverseSqrt();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c_ols * w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const int rank = std::min<int>(H, static_cast<int>(svd.singularValues().size()));
  const Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
  const Eigen::MatrixXd v = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd d = svd.singularValues().head(rank);

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(family.output_dim, H);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(H, family.input_dim);
  B.leftCols(rank) = u * d.asDiagonal();
  A.topRows(rank) = v.transpose() * w_inv;
  return pack_rrr(A, B);
}

Eigen::VectorXd fit_mle(const ModelFamily& family, const Dataset& data, std::uint64_t seed) {
  switch (family.kind) {
    case FamilyKind::gmm: return fit_gmm_em(family, data, 8, 500, seed);
    case FamilyKind::rrr: return fit_rrr_mle(family, data);
    case FamilyKind::normal_mean: {
      validate_dataset(family, data);
      Eigen::VectorXd theta(1);
      theta[0] = std::clamp(data.outputs.col(0).mean(), -1.0, 1.0);
      return theta;
    }
    case FamilyKind::normal_mean_conj: {
      validate_dataset(family, data);
      Eigen::VectorXd theta(1);
      theta[0] = data.outputs.col(0).mean();
      return theta;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace lscrit
