#include "lscrit/sampler.hpp"

#include "lscrit/math_util.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lscrit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kChainStream = 0x636861696eull;  // chain sub-stream tag
constexpr double kTargetAcceptance = 0.234;

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> unit;
  return boost::math::quantile(unit, p);
}

struct ChainResult {
  std::vector<Eigen::VectorXd> draws;
  std::vector<double> tempered_logpost;
  std::vector<double> untempered_loglik;
  double acceptance_rate = 0.0;
};

ChainResult run_single_chain(const ModelFamily& family, const Dataset& data, double beta,
                             const ChainConfig& cfg, std::uint64_t chain_seed) {
  Rng rng(chain_seed);
  const int dim = family.unconstrained_dim();

  struct State {
    Eigen::VectorXd u;
    Eigen::VectorXd theta;
    double loglik = 0.0;
    double logprior = kNegInf;
    double logjac = 0.0;
    double target = kNegInf;
  };
  auto evaluate = [&](const Eigen::VectorXd& u) {
    State s;
    s.u = u;
    s.theta = from_unconstrained(family, u, &s.logjac);
    s.logprior = log_prior(family, s.theta);
    if (std::isfinite(s.logprior)) {
      s.loglik = -negative_log_likelihood(family, s.theta, data);
      s.target = beta * s.loglik + s.logprior + s.logjac;
    }
    return s;
  };

  State cur;
  bool initialized = false;
  for (int attempt = 0; attempt < 100 && !initialized; ++attempt) {
    const Eigen::VectorXd theta0 = draw_from_prior(family, rng);
    cur = evaluate(to_unconstrained(family, theta0));
    initialized = std::isfinite(cur.target);
  }
  if (!initialized)
    throw std::runtime_error("run_chains: no finite log-posterior after 100 prior draws");

  double scale = cfg.initial_scale;
  const int total = cfg.warmup + cfg.draws;
  int warmup_accepts = 0;
  int accepts = 0;
  ChainResult out;
  out.draws.reserve(cfg.draws / std::max(1, cfg.thin) + 1);
  Eigen::VectorXd prop(dim);

  for (int t = 0; t < total; ++t) {
    for (int j = 0; j < dim; ++j) prop[j] = cur.u[j] + scale * rng.normal();
    const double log_u = std::log(1.0 - rng.uniform());
    const State cand = evaluate(prop);
    const double delta = cand.target - cur.target;
    double alpha = 0.0;
    if (std::isfinite(delta))
      alpha = std::min(1.0, std::exp(delta));
    else if (delta > 0.0)
      alpha = 1.0;
    const bool accept = std::isfinite(delta) ? (log_u < delta) : (delta > 0.0);
    if (accept) cur = cand;

    if (t < cfg.warmup) {
      warmup_accepts += accept;
      scale *= std::exp(std::pow(t + 1.0, -0.6) * (alpha - kTargetAcceptance));
    } else {
      accepts += accept;
      const int k = t - cfg.warmup;
      if (k % cfg.thin == cfg.thin - 1) {
        out.draws.push_back(cur.theta);
        out.tempered_logpost.push_back(beta * cur.loglik + cur.logprior);
        out.untempered_loglik.push_back(cur.loglik);
      }
    }
  }
  if (cfg.warmup >= 200 && warmup_accepts == 0)
    throw std::runtime_error("run_chains: degenerate chain (no acceptances in warmup)");
  out.acceptance_rate = cfg.draws > 0 ? static_cast<double>(accepts) / cfg.draws : 0.0;
  return out;
}

// ---- R-hat / ESS machinery -------------------------------------------------

// Equal-length sequences (split chain halves).
using SequenceSet = std::vector<std::vector<double>>;

SequenceSet split_in_halves(const std::vector<double>& values, const std::vector<int>& chain_id,
                            int chains) {
  std::vector<std::vector<double>> per_chain(chains);
  for (std::size_t k = 0; k < values.size(); ++k) per_chain[chain_id[k]].push_back(values[k]);
  std::size_t min_len = values.size();
  for (const auto& c : per_chain) min_len = std::min(min_len, c.size());
  const std::size_t half = min_len / 2;
  SequenceSet seqs;
  for (const auto& c : per_chain) {
    seqs.emplace_back(c.begin(), c.begin() + half);
    seqs.emplace_back(c.begin() + half, c.begin() + 2 * half);
  }
  return seqs;
}

void rank_normalize(SequenceSet& seqs) {
  struct Entry {
    double value;
    std::size_t seq, pos;
  };
  std::vector<Entry> pool;
  for (std::size_t s = 0; s < seqs.size(); ++s)
    for (std::size_t i = 0; i < seqs[s].size(); ++i) pool.push_back({seqs[s][i], s, i});
  std::sort(pool.begin(), pool.end(),
            [](const Entry& a, const Entry& b) { return a.value < b.value; });
  const double S = static_cast<double>(pool.size());
  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t j = i;
    while (j + 1 < pool.size() && pool[j + 1].value == pool[i].value) ++j;
    const double rank = 0.5 * (i + j) + 1.0;  // average rank, 1-based
    const double z = normal_quantile((rank - 0.375) / (S + 0.25));
    for (std::size_t k = i; k <= j; ++k) seqs[pool[k].seq][pool[k].pos] = z;
    i = j + 1;
  }
}

double seq_mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / x.size();
}

double seq_var(const std::vector<double>& x, double mean) {
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / (x.size() - 1);
}

struct VarianceDecomposition {
  double w = 0.0, b = 0.0, var_plus = 0.0;
  std::vector<double> means, vars;
};

VarianceDecomposition decompose(const SequenceSet& seqs) {
  VarianceDecomposition d;
  const double L = static_cast<double>(seqs.front().size());
  for (const auto& s : seqs) {
    const double m = seq_mean(s);
    d.means.push_back(m);
    d.vars.push_back(seq_var(s, m));
  }
  d.w = std::accumulate(d.vars.begin(), d.vars.end(), 0.0) / d.vars.size();
  const double grand = seq_mean(d.means);
  double b = 0.0;
  for (double m : d.means) b += (m - grand) * (m - grand);
  d.b = L * b / (d.means.size() - 1);
  d.var_plus = (L - 1.0) / L * d.w + d.b / L;
  return d;
}

double rhat_from(const VarianceDecomposition& d) {
  if (d.w <= 0.0) return d.b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(d.var_plus / d.w);
}

// Geyer initial-monotone-sequence ESS over the combined sequences.
double ess_from(const SequenceSet& seqs, const VarianceDecomposition& d, double total_draws) {
  const std::size_t L = seqs.front().size();
  if (d.var_plus <= 0.0) return total_draws;
  const std::size_t max_lag = L - 1;
  // Per-sequence biased autocovariances, averaged across sequences lazily.
  auto mean_autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const auto& x = seqs[s];
      const double m = d.means[s];
      double c = 0.0;
      for (std::size_t i = 0; i + lag < L; ++i) c += (x[i] - m) * (x[i + lag] - m);
      acc += c / L;
    }
    return acc / seqs.size();
  };
  auto rho = [&](std::size_t lag) { return 1.0 - (d.w - mean_autocov(lag)) / d.var_plus; };

  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 <= max_lag; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone non-increasing
    prev_pair = pair;
    tau += 2.0 * pair;
    if (pair < 1e-12) break;
  }
  tau = std::max(tau, 1.0 / total_draws);
  return std::min(total_draws / tau, total_draws);
}

}  // namespace

TemperSpec TemperSpec::tempered(double beta0) {
  if (!(beta0 > 0.0)) throw std::invalid_argument("TemperSpec: beta0 must be > 0");
  TemperSpec t;
  t.beta0 = beta0;
  t.untempered = false;
  return t;
}

TemperSpec TemperSpec::beta_one() {
  TemperSpec t;
  t.untempered = true;
  return t;
}

double TemperSpec::beta_for(int n) const {
  if (untempered) return 1.0;
  if (n < 3)
    throw std::invalid_argument("TemperSpec: the beta0/log(n) schedule requires n >= 3");
  return beta0 / std::log(static_cast<double>(n));
}

PosteriorSamples run_chains(const ModelFamily& family, const Dataset& data,
                            const TemperSpec& temper, const ChainConfig& cfg) {
  validate_dataset(family, data);
  if (cfg.chains < 1) throw std::invalid_argument("run_chains: chains must be >= 1");
  if (cfg.warmup < 0 || cfg.draws < 1 || cfg.thin < 1)
    throw std::invalid_argument("run_chains: invalid iteration counts");
  if (!(cfg.initial_scale > 0.0))
    throw std::invalid_argument("run_chains: initial_scale must be > 0");
  const double beta = temper.beta_for(data.n());
  const int retained = cfg.draws / cfg.thin;
  if (retained < 100)
    std::cerr << "[lscrit] warning: only " << retained
              << " retained draws per chain; criteria want >= 100\n";

  PosteriorSamples samples;
  samples.family = family;
  samples.beta = beta;
  samples.untempered = temper.untempered;
  if (!temper.untempered) samples.beta0 = temper.beta0;
  samples.n_data = data.n();

  for (int c = 0; c < cfg.chains; ++c) {
    const std::uint64_t chain_seed = derive_seed(cfg.seed, kChainStream, static_cast<std::uint64_t>(c));
    ChainResult r = run_single_chain(family, data, beta, cfg, chain_seed);
    for (std::size_t k = 0; k < r.draws.size(); ++k) {
      samples.draws.push_back(std::move(r.draws[k]));
      samples.tempered_logpost.push_back(r.tempered_logpost[k]);
      samples.untempered_loglik.push_back(r.untempered_loglik[k]);
      samples.chain_id.push_back(c);
    }
    samples.acceptance_rate.push_back(r.acceptance_rate);
    if (r.acceptance_rate < 0.1 || r.acceptance_rate > 0.6)
      std::cerr << "[lscrit] warning: chain " << c << " acceptance rate "
                << r.acceptance_rate << " outside [0.1, 0.6]\n";
  }
  return samples;
}

double posterior_expectation(const PosteriorSamples& samples,
                             const std::function<double(const Eigen::VectorXd&)>& f) {
  if (samples.draws.empty())
    throw std::invalid_argument("posterior_expectation: empty sample set");
  double acc = 0.0;
  for (const auto& theta : samples.draws) acc += f(theta);
  return acc / static_cast<double>(samples.draws.size());
}

Diagnostics diagnose(const PosteriorSamples& samples) {
  const int chains =
      samples.chain_id.empty() ? 0 : *std::max_element(samples.chain_id.begin(),
                                                       samples.chain_id.end()) + 1;
  if (chains < 2) throw std::invalid_argument("diagnose: needs >= 2 chains");
  std::vector<int> counts(chains, 0);
  for (int c : samples.chain_id) ++counts[c];
  for (int c = 0; c < chains; ++c)
    if (counts[c] < 50) throw std::invalid_argument("diagnose: needs >= 50 draws per chain");

  // Summary columns. gmm uses permutation-invariant summaries.
  Diagnostics diag;
  std::vector<std::vector<double>> columns;
  if (samples.family.kind == FamilyKind::gmm) {
    const int H = samples.family.components;
    for (int h = 0; h < H; ++h) diag.names.push_back("sorted_mu1[" + std::to_string(h + 1) + "]");
    columns.resize(H);
    std::vector<double> first_coord(H);
    for (const auto& theta : samples.draws) {
      for (int h = 0; h < H; ++h) first_coord[h] = theta[H + h * samples.family.output_dim];
      std::sort(first_coord.begin(), first_coord.end());
      for (int h = 0; h < H; ++h) columns[h].push_back(first_coord[h]);
    }
  } else {
    const auto names = samples.family.param_names();
    const int dim = samples.family.param_dim();
    diag.names.assign(names.begin(), names.end());
    columns.resize(dim);
    for (const auto& theta : samples.draws)
      for (int j = 0; j < dim; ++j) columns[j].push_back(theta[j]);
  }
  diag.names.push_back("loglik");
  columns.push_back(samples.untempered_loglik);

  const double total = static_cast<double>(samples.size());
  diag.max_r_hat = 0.0;
  diag.min_ess = total;
  for (const auto& col : columns) {
    SequenceSet seqs = split_in_halves(col, samples.chain_id, chains);
    rank_normalize(seqs);
    const VarianceDecomposition d = decompose(seqs);
    const double r = rhat_from(d);
    const double e = ess_from(seqs, d, total);
    diag.r_hat.push_back(r);
    diag.ess.push_back(e);
    diag.max_r_hat = std::max(diag.max_r_hat, r);
    diag.min_ess = std::min(diag.min_ess, e);
  }
  return diag;
}

double mcse_of_mean(const std::vector<double>& values, const std::vector<int>& chain_id,
                    int chains) {
  if (values.empty() || chains < 1) throw std::invalid_argument("mcse_of_mean: empty input");
  const double mean = seq_mean(values);
  const double var = values.size() > 1 ? seq_var(values, mean) : 0.0;
  if (var == 0.0) return 0.0;
  SequenceSet seqs = split_in_halves(values, chain_id, chains);
  if (seqs.front().size() < 4) return std::sqrt(var / values.size());
  const VarianceDecomposition d = decompose(seqs);
  const double ess = ess_from(seqs, d, static_cast<double>(values.size()));
  return std::sqrt(var / ess);
}

std::string draws_to_csv(const PosteriorSamples& samples) {
  std::ostringstream out;
  out << "chain,iter,tempered_logpost,untempered_loglik";
  for (const auto& name : samples.family.param_names()) out << ',' << name;
  out << '\n';
  int iter = 0, prev_chain = -1;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples.chain_id[k] != prev_chain) {
      prev_chain = samples.chain_id[k];
      iter = 0;
    }
    out << samples.chain_id[k] << ',' << iter++ << ','
        << format_double(samples.tempered_logpost[k]) << ','
        << format_double(samples.untempered_loglik[k]);
    for (int j = 0; j < samples.draws[k].size(); ++j)
      out << ',' << format_double(samples.draws[k][j]);
    out << '\n';
  }
  return out.str();
}

}  // namespace lscrit
